#pragma once

#include <stdexcept>
#include <string>

namespace rotpend {

// File-system level failure, kept distinct from validation and numerical
// errors so the CLI can map it to its own exit code.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rotpend
