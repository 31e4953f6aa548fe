#pragma once

#include <stdexcept>
#include <string>

namespace droneq {

// File could not be understood at the syntax/schema level.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File parsed but violates a documented data invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A waiting-time formula was evaluated at or past its stability boundary.
struct StabilityError : std::runtime_error {
    StabilityError(int facility_, double load_, double servers_)
        : std::runtime_error("facility " + std::to_string(facility_) + " unstable: load " +
                             std::to_string(load_) + " vs " + std::to_string(servers_) +
                             " drones"),
          facility(facility_),
          load(load_),
          servers(servers_) {}
    int facility;
    double load;
    double servers;
};

// No feasible solution exists under the given budget/endurance limits.
struct InfeasibleInstance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact enumeration was requested beyond its documented size bounds.
struct SizeExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace droneq
