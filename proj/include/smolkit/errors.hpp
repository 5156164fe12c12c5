#pragma once

#include <stdexcept>
#include <string>

namespace smolkit {

/// Caller violated a documented precondition (bad parameter, wrong shape).
class PreconditionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A hypothesis a bound check relies on does not hold for the supplied data.
class HypothesisError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The explicit reaction step would violate the loss-dominance bound.
class StepSizeError : public std::runtime_error {
  public:
    StepSizeError(const std::string& what, std::size_t cell, int mass, double needed_dt)
        : std::runtime_error(what), cell_(cell), mass_(mass), needed_dt_(needed_dt) {}

    std::size_t cell() const { return cell_; }
    int mass() const { return mass_; }
    double needed_dt() const { return needed_dt_; }

  private:
    std::size_t cell_;
    int mass_;
    double needed_dt_;
};

/// Malformed or out-of-range scenario configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace smolkit
