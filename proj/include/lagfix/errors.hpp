#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lagfix {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invertibility_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// stress ODE produced non-finite values; carries the time of failure
struct blowup_error : std::runtime_error {
    double t_fail;
    blowup_error(const std::string& msg, double t) : std::runtime_error(msg), t_fail(t) {}
};

// a state frame left the invariant set; carries the frame index
struct invariant_violation_error : std::runtime_error {
    int frame;
    invariant_violation_error(const std::string& msg, int frame_) : std::runtime_error(msg), frame(frame_) {}
};

struct IterationRecord {
    int iter = 0;
    double distance = 0.0;
    double ratio = 0.0;
    double seconds = 0.0;
};

// Picard iteration did not reach tolerance; carries the distance history
struct non_convergence_error : std::runtime_error {
    std::vector<IterationRecord> history;
    non_convergence_error(const std::string& msg, std::vector<IterationRecord> h)
        : std::runtime_error(msg), history(std::move(h)) {}
};

}  // namespace lagfix
