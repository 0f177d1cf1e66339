#pragma once

#include <stdexcept>
#include <string>

namespace pks {

/// Requested combination is valid input but outside what the library handles
/// (e.g. W1 for n_q > 1, non-oscillatory closed forms).
class Unsupported : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The adaptive integrator could not advance (step-size underflow, step budget).
class IntegrationFailure : public std::runtime_error {
public:
    IntegrationFailure(const std::string& what, double time)
        : std::runtime_error(what + " at t = " + std::to_string(time)), time_(time) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace pks
