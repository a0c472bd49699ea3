#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hrank/certify.hpp"
#include "hrank/construct.hpp"
#include "hrank/diskop.hpp"

namespace hrank {

inline constexpr int kStateVersion = 1;

// Everything a run commits: configuration, atoms and per-stage records.
struct State {
    int version = kStateVersion;
    PrecisionContext precision;
    Schedule schedule;
    BaseParams base;
    std::vector<Atom> atoms;
    std::vector<StageRecord> stages;

    ClarkSystem system() const;
    // Stored per-stage precisions, used only as starting points by verify.
    std::vector<Bits> precision_hints() const;
};

State make_state(const RunConfig& config, const Construction& c);

// Numbers are written as {"mid", "rad", "p"} decimal balls. Certificate
// values are rounded outward to 128 bits. Output is deterministic and
// parse followed by serialize reproduces the input bytes.
std::string serialize(const State& s);
// Throws SchemaError on malformed input.
State parse(const std::string& text);

void save(const State& s, const std::filesystem::path& path);
// Throws SchemaError, or Error when the file cannot be read.
State load(const std::filesystem::path& path);

// Plot-ready tables. Atom values are exact decimals; derived values carry
// 40 significant digits.
void write_atoms_csv(const std::filesystem::path& path, const State& s);
void write_zeros_csv(const std::filesystem::path& path, const State& s);
// Pairwise gaps ||f_j^N - f_k^N|| over all ordered pairs j != k at stage N.
void write_gaps_csv(const std::filesystem::path& path, const State& s, int N);

// report.json, disk.csv, spectrum.csv, singular.csv, gaps.csv, atoms.csv and
// zeros.csv for stage N.
void write_operator_outputs(const std::filesystem::path& dir, const State& s, int N, const DiskOperatorBundle& b,
                            const SpectralReport& spec, const ChecklistReport& check,
                            const StructuralReport& structure);

}  // namespace hrank
