#include "modalsim/pipeline/report.hpp"

#include <cstdio>
#include <fstream>

#include "modalsim/error.hpp"

namespace modalsim::pipeline {

DiagnosticsReport DiagnosticsReport::from_sequence(const dynamics::DeformationSequence& seq) {
    DiagnosticsReport report;
    report.frames = static_cast<int>(seq.frames.size());
    report.mode_count = seq.mode_count;
    report.rest_volume = seq.rest_volume;
    report.max_abs_volume_ratio = seq.max_abs_volume_ratio();
    report.mean_fps = seq.mean_fps();
    for (const auto& d : seq.diagnostics)
        report.max_constraint_error = std::max(report.max_constraint_error,
                                               d.constraint_error);
    return report;
}

void write_report_csv(const dynamics::DeformationSequence& seq, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write report: " + path);
    out << "frame,time_s,volume_m3,volume_ratio,step_ms,constraint_err_m\n";
    char buf[200];
    for (std::size_t i = 0; i < seq.diagnostics.size(); ++i) {
        const auto& d = seq.diagnostics[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.12g,%.9g,%.6g,%.9g\n", i, d.time,
                      d.volume, d.volume_ratio, d.step_ms, d.constraint_error);
        out << buf;
    }
    if (!out)
        throw IoError("write failed: " + path);
}

} // namespace modalsim::pipeline
