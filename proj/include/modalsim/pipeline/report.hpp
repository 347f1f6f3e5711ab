#pragma once

#include <string>

#include "modalsim/dynamics/simulate.hpp"

namespace modalsim::pipeline {

// Aggregate of a simulate run. The CSV column set and order are stable:
// frame,time_s,volume_m3,volume_ratio,step_ms,constraint_err_m
struct DiagnosticsReport {
    int frames = 0;
    int mode_count = 0;
    double rest_volume = 0.0;        // m^3
    double max_abs_volume_ratio = 0.0;
    double max_constraint_error = 0.0; // m
    double mean_fps = 0.0;

    static DiagnosticsReport from_sequence(const dynamics::DeformationSequence& seq);
};

void write_report_csv(const dynamics::DeformationSequence& seq, const std::string& path);

} // namespace modalsim::pipeline
