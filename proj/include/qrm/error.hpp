#pragma once

#include <stdexcept>
#include <string>

namespace qrm {

/// Error raised by any pipeline stage. `stage()` names where it happened so the
/// harness can report it without parsing the message.
class Error : public std::runtime_error {
public:
    Error(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

inline void require(bool cond, const char* stage, const std::string& what) {
    if (!cond) throw Error(stage, what);
}

} // namespace qrm
