#pragma once

#include "pba/calibration.hpp"
#include "pba/emulator.hpp"
#include "pba/pba_engine.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace pba {

// CSV conventions: '.' decimal, ',' separator, mandatory header row.

void write_ensemble_csv(const std::filesystem::path& path, const Design& design);
Design read_ensemble_csv(const std::filesystem::path& path);

void write_observations_csv(const std::filesystem::path& path, const Vector& depths,
                            const Vector& z);
void read_observations_csv(const std::filesystem::path& path, Vector& depths, Vector& z);

// Long-format replicate table: one row per (replicate, analysis) with the
// sampled y repeated per row. J0 carries classId 0, memberId 0.
struct ReplicateCsvWriter {
    explicit ReplicateCsvWriter(const std::filesystem::path& path, bool append);
    void write_row(const ReplicateRow& row, const std::vector<SampledMember>& members);
    void flush();

private:
    std::filesystem::path path_;
};

// Rebuilds replicate rows from the table; rows of unknown replicate ids or
// mismatched width raise ConfigError.
std::vector<ReplicateRow> read_replicates_csv(const std::filesystem::path& path,
                                              std::size_t memberCount);

void write_chain_csv(const std::filesystem::path& path, const CalibrationChain& chain,
                     const Vector& perStateMeans);

struct Manifest {
    std::string configHash;
    int replicateCount = 0;
    int memberCount = 0;
    std::set<int> completed;
    std::set<int> partial;
    bool finished = false;

    void save(const std::filesystem::path& path) const;
    static Manifest load(const std::filesystem::path& path);
};

void save_result_json(const std::filesystem::path& path, const PbaRunResult& result,
                      const std::string& configHash);

// Summary record for a single analysis (cmd run-analysis).
void save_summary_json(const std::filesystem::path& path, const PosteriorSummary& summary,
                       const std::string& configHash, const std::string& analysisId);

std::string format_double(double v);

}  // namespace pba
