#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hrank/clark.hpp"
#include "hrank/herglotz.hpp"

namespace hrank {

class Schedule {
public:
    enum class Rule { Triangular, Custom };

    static Schedule triangular() { return Schedule(); }
    // custom[i] is l(i + 2); every entry must satisfy 1 <= l(N) < N.
    static Schedule custom(std::vector<int> targets);

    Rule rule() const { return rule_; }
    const std::vector<int>& targets() const { return custom_; }
    // l(N) for N >= 2, one-based. Throws IndexError past a custom list.
    int target(int N) const;
    std::string name() const;

private:
    Rule rule_ = Rule::Triangular;
    std::vector<int> custom_;
};

enum class Verdict { Pass, Fail, Undecidable };

const char* verdict_name(Verdict v);

struct Certificate {
    std::string name;
    std::string part;  // "lower"/"upper" for dist, empty otherwise
    int index = 0;     // worst one-based j or n for aggregated checks, 0 if none
    CertReal lhs_upper;
    CertReal rhs_lower;
    CertReal margin;   // rhs_lower - lhs_upper
    Bits precision_bits = 0;
    Verdict verdict = Verdict::Undecidable;

    bool pass() const { return verdict == Verdict::Pass; }
    std::string label() const { return part.empty() ? name : name + "(" + part + ")"; }
};

// Pass iff lhs < rhs certified; Fail iff lhs >= rhs certified.
Certificate make_certificate(const std::string& name, const CertReal& lhs, const CertReal& rhs, Bits p,
                             int index = 0, const std::string& part = "");

struct StageRecord {
    int N = 0;
    Bits precision_bits = 0;
    CertReal epsilon;
    CertReal t_new;
    CertReal mu_new;
    CertReal c_new;
    CertReal delta;        // lower bound of min |lambda_j - t_n|
    CertReal basis_const;  // A_N
    int schedule_target = 0;          // l(N), one-based; 0 for N = 1
    std::vector<CertReal> lambdas;    // lambda_j^N in creation order
    std::vector<int> interval_of;     // sorted-pole interval holding lambda_j^N
    std::vector<Certificate> certificates;

    Verdict verdict() const;
    const Certificate* find(const std::string& name, const std::string& part = "") const;
};

struct BaseParams {
    std::string t1 = "0.5";
    std::string mu1 = "0.25";
    std::string c1 = "0.125";
};

// Throws ConfigError when a cap is violated.
std::pair<ClarkSystem, StageRecord> init_stage1(const BaseParams& base, Bits bits);
// Stage-1 record for given exact atom (used by verify).
StageRecord certify_stage1(const Atom& atom, Bits bits);

// Everything stage N needs from stage N - 1.
struct StageInputs {
    ClarkSystem sys_prev;
    std::vector<int> interval_of_prev;
    CertReal A_prev;
    CertReal delta_prev;
    int N = 2;
    int target = 1;
};

StageInputs next_inputs(const ClarkSystem& sys, const StageRecord& rec, const Schedule& schedule);

// Level-epsilon zero of H_{N-1} nearest lambda_{l(N)}^{N-1}. Throws TieBreak
// when the nearest zero cannot be certified.
CertReal select_t_new(const StageInputs& in, const CertReal& epsilon, Bits bits);

struct RunConfig {
    int stages = 6;
    Schedule schedule;
    BaseParams base;
    PrecisionContext precision;
    int iteration_cap = 10000;
    std::function<void(const std::string&)> log;
};

struct Construction {
    ClarkSystem sys;
    std::vector<StageRecord> records;
};

// Stage N >= 2 from scratch: epsilon loop, then c loop, then A_N and delta_N.
// Escalates precision on undecidable outcomes starting from ctx.bits, which
// is updated to the precision finally used.
StageRecord construct_stage(const StageInputs& in, PrecisionContext& ctx, int iteration_cap,
                            const std::function<void(const std::string&)>& log = {});

Construction run(const RunConfig& config);

// Recomputes every certificate of stage N >= 2 for the given new atom.
StageRecord certify_stage(const StageInputs& in, const Atom& atom, Bits bits);

struct VerifyReport {
    std::vector<StageRecord> records;
    bool pass = false;
    std::string first_failure;  // "stage N: name" or empty
};

// Re-derives all stages from the atoms alone. bits_hint[N-1] (if present) is
// the starting precision of stage N, otherwise the larger of the previous
// stage's precision and the atom's own. Undecidable stages are retried at up
// to two doublings.
VerifyReport verify_atoms(const std::vector<Atom>& atoms, const Schedule& schedule,
                          const std::vector<Bits>& bits_hint, const PrecisionContext& ctx);

}  // namespace hrank
