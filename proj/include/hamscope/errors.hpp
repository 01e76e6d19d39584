// errors.hpp — Error types raised by the identification pipeline.
#pragma once

#include <stdexcept>
#include <string>

namespace hamscope {

// Two recovered or requested frequencies coincide within the resolution
// needed to tell eigenspaces apart.
class DegeneracyError : public std::runtime_error {
  public:
    explicit DegeneracyError(const std::string& what) : std::runtime_error(what) {}
};

// The signal does not carry the requested number of modes.
class RankDeficiencyError : public std::runtime_error {
  public:
    explicit RankDeficiencyError(const std::string& what) : std::runtime_error(what) {}
};

// The pipeline could not produce a usable estimate.
class IdentificationError : public std::runtime_error {
  public:
    explicit IdentificationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hamscope
