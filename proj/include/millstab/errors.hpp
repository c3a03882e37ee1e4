#pragma once

#include <stdexcept>
#include <string>

namespace millstab {

/// A numerical routine produced non-finite values or failed to converge.
struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// The sensor window does not carry enough excitation to identify the
/// requested parameters (rank-deficient or ill-conditioned fit).
struct UnidentifiableWindow : std::runtime_error {
    explicit UnidentifiableWindow(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace millstab
