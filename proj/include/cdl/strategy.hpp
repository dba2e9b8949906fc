#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cdl {

// A player either cooperates (uploads/downloads through the parameter server)
// or defects (trains purely locally).
enum class Strategy : std::uint8_t { CP, DF };

// Per-player choices, ordered by ascending participant id.
using StrategyProfile = std::vector<Strategy>;

inline const char* to_string(Strategy s) { return s == Strategy::CP ? "CP" : "DF"; }

inline std::string to_string(const StrategyProfile& profile) {
    std::string out;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (i) out += ',';
        out += to_string(profile[i]);
    }
    return out;
}

} // namespace cdl
