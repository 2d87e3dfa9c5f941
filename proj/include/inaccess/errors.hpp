#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace inaccess {

/// Precondition or configuration violation detected before any work is done.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulated state became non-finite or left the representable range.
///
/// Carries the step at which it happened and, once it reaches a Monte Carlo
/// driver, the path index and per-path seed so the path can be replayed.
class numerical_blowup : public std::runtime_error {
public:
    static constexpr std::size_t no_path = static_cast<std::size_t>(-1);

    numerical_blowup(const std::string& what, std::size_t step,
                     std::uint64_t seed, std::size_t path_index = no_path)
        : std::runtime_error(what), step_(step), seed_(seed), path_index_(path_index) {}

    std::size_t step() const noexcept { return step_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t path_index() const noexcept { return path_index_; }

    numerical_blowup with_path(std::size_t path_index) const {
        return numerical_blowup(
            std::string(what()) + " (path " + std::to_string(path_index) + ")",
            step_, seed_, path_index);
    }

private:
    std::size_t step_;
    std::uint64_t seed_;
    std::size_t path_index_;
};

}  // namespace inaccess
