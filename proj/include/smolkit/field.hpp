#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "smolkit/kernels.hpp"

namespace smolkit {

/// Periodic grid of M^dim cells on a torus of side `length`.
/// Cells are numbered row-major with the last coordinate fastest.
class Grid {
  public:
    Grid(int dim, double length, int cells_per_side);

    int dim() const { return dim_; }
    double length() const { return length_; }
    int cells_per_side() const { return m_; }
    std::size_t cell_count() const { return count_; }
    double spacing() const { return length_ / m_; }
    double cell_volume() const;
    double volume() const;

    std::array<int, 3> coords(std::size_t cell) const;
    std::size_t index(const std::array<int, 3>& c) const;
    std::array<double, 3> center(std::size_t cell) const;
    /// Cell containing a (wrapped) position.
    std::size_t cell_of(const std::array<double, 3>& x) const;
    /// Euclidean length of the minimal-image displacement between cell centres.
    double min_image_distance(std::size_t a, std::size_t b) const;

    bool operator==(const Grid&) const = default;

  private:
    int dim_;
    double length_;
    int m_;
    std::size_t count_;
};

/// Densities f_n(x) for n = 1..n_max, stored mass-major: each species is a contiguous slab.
class MassField {
  public:
    MassField(Grid grid, Mass n_max);

    const Grid& grid() const { return grid_; }
    Mass n_max() const { return n_max_; }
    std::size_t cells() const { return grid_.cell_count(); }

    double& operator()(Mass n, std::size_t cell) { return data_[offset(n) + cell]; }
    double operator()(Mass n, std::size_t cell) const { return data_[offset(n) + cell]; }

    std::span<double> species(Mass n) { return {data_.data() + offset(n), cells()}; }
    std::span<const double> species(Mass n) const { return {data_.data() + offset(n), cells()}; }

    /// Values f_1..f_{n_max} at one cell.
    std::vector<double> cell_values(std::size_t cell) const;
    void set_cell_values(std::size_t cell, std::span<const double> c);

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Mass that has left the truncated system (GelReservoir policy).
    double gel_reservoir = 0.0;

    /// All entries finite and >= 0.
    bool valid() const;
    bool species_is_zero(Mass n) const;

  private:
    std::size_t offset(Mass n) const {
        return static_cast<std::size_t>(n - 1) * grid_.cell_count();
    }

    Grid grid_;
    Mass n_max_;
    std::vector<double> data_;
};

/// Spatially uniform density on one species.
MassField make_uniform(const Grid& grid, Mass n_max, Mass species, double density);
/// Adds amplitude * exp(-|x - centre|^2 / (2 width^2)) (minimal image) to one species.
void add_gaussian(MassField& f, Mass species, double amplitude, double width,
                  const std::array<double, 3>& centre);

struct MomentSpec {
    double a = 1.0;
    bool hat = false;  // weight by d(n)^{dim/2}
};

/// Per cell: sum_n n^a [d(n)^{dim/2}] f_n.
std::vector<double> moment(const MassField& f, const MomentSpec& spec, const DiffusionProfile& dp);

/// hat = false: sum_{n,m} n m (n^a + m^a)(d(n)+d(m)) f_n f_m
/// hat = true:  sum_{n,m} (n^a m + m^a n) alpha(n,m) f_n f_m
std::vector<double> pair_moment_Y(const MassField& f, double a, const DiffusionProfile& dp,
                                  const Kernel& k, bool hat);

/// Riemann sum of a per-cell scalar field.
double integrate(const Grid& grid, std::span<const double> values);

struct MassTotals {
    double excluding_gel = 0.0;
    double including_gel = 0.0;
};

MassTotals total_mass(const MassField& f);

/// Total particle number sum_n int f_n dx.
double total_number(const MassField& f);

/// Test function phi_0 as a function of |x|. Returns +infinity at r = 0 for dim >= 2.
double phi0(double r, int dim);

struct InitialFunctionals {
    double A1 = 0.0;  // double integral of X_a(x) X_1(y) phi0(x - y)
    double A2 = 0.0;  // max_x int X_a(y) phi0(x - y) dy
    double A3 = 0.0;  // int X_a dx
    bool self_pairs_skipped = false;
};

/// Initial-data admissibility functionals over cell pairs (minimal image).
/// For dim >= 2 the zero-displacement pair is skipped.
InitialFunctionals initial_data_functionals(const MassField& f, double a);

}  // namespace smolkit
