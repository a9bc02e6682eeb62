#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "windlq/design.hpp"
#include "windlq/linearize.hpp"
#include "windlq/metrics.hpp"
#include "windlq/runner.hpp"

namespace windlq {

// Documents emitted by the CLI carry a "schema" tag, except gains.json which
// is read back as controller input and stays minimal.
inline constexpr const char* kCertificateSchema = "windlq.certificate/1";
inline constexpr const char* kMetricsSchema = "windlq.metrics/1";
inline constexpr const char* kCompareSchema = "windlq.compare/1";
inline constexpr const char* kEquilibriumSchema = "windlq.equilibrium/1";
inline constexpr const char* kLinearizationSchema = "windlq.linearization/1";
inline constexpr const char* kDelSchema = "windlq.del/1";

nlohmann::json certificate_json(const RegionDesign& design, Region region);
nlohmann::json equilibrium_json(const Equilibrium& eq, double scaled_residual);
nlohmann::json linearization_json(const LinearModel& model, const CharacteristicScales& scales);
nlohmann::json run_json(const Scenario& scenario, const RunResult& run);
nlohmann::json compare_json(const nlohmann::json& run_a, const nlohmann::json& run_b);

struct DelChannel {
    std::string name;
    DelSpec spec;
    CycleSet cycles;
    double del = 0.0;
};
// Output of the `del` command: RMS error and rates over the evaluated window
// plus per-channel DELs.
nlohmann::json del_json(const std::vector<DelChannel>& channels, const std::string& source, double rms_error,
                        const RateStatistics& rates);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
// Plain numeric matrix, one row per line, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
void write_cycles_csv(const std::filesystem::path& path, const CycleSet& cycles);
CycleSet read_cycles_csv(const std::filesystem::path& path);

// Re-reads an emitted file and checks it against its documented schema:
// JSON documents by their schema tag (or the gains layout), CSV files by
// header (trajectory, wind, cycles), SDPA files by parsing, SVG by structure.
// Throws ValidationError naming the file and the first problem.
void validate_emitted_file(const std::filesystem::path& path);

}  // namespace windlq
