// Command-line front end: construct | verify | operator | gaps.
// Exit codes: 0 all certificates pass, 1 certificate failure, 2 usage or IO.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hrank/certify.hpp"
#include "hrank/construct.hpp"
#include "hrank/diskop.hpp"
#include "hrank/state.hpp"

using namespace hrank;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

std::string log2_text(const CertReal& x) {
    if (mpfr_zero_p(x.mid().get())) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s2^%.2f", x.sign() < 0 ? "-" : "", x.log2_abs());
    return buf;
}

Schedule parse_schedule(const std::string& s) {
    if (s == "triangular") return Schedule::triangular();
    std::vector<int> targets;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            targets.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("schedule must be 'triangular' or a comma list of l(2), l(3), ...");
        }
    }
    return Schedule::custom(targets);
}

// Accepts decimals and the exact form 2^-k.
CertReal parse_epsilon(const std::string& s) {
    if (s.rfind("2^", 0) == 0) {
        try {
            std::size_t used = 0;
            const long e = std::stol(s.substr(2), &used);
            if (used + 2 != s.size()) throw std::invalid_argument(s);
            return CertReal::pow2(e, 128);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse epsilon " + s);
        }
    }
    try {
        return CertReal::from_decimal(s, 128);
    } catch (const Error&) {
        throw ConfigError("cannot parse epsilon " + s);
    }
}

void print_certificates(const StageRecord& r) {
    for (const auto& c : r.certificates) {
        std::cout << "  stage " << r.N << "  " << c.label();
        if (c.index > 0) std::cout << " [" << c.index << "]";
        std::cout << "  " << verdict_name(c.verdict) << "  lhs " << log2_text(c.lhs_upper) << "  rhs "
                  << log2_text(c.rhs_lower) << "  margin " << log2_text(c.margin) << "  (" << c.precision_bits
                  << " bits)\n";
    }
}

int cmd_construct(int stages, const BaseParams& base, long bits, long max_bits, const std::string& schedule,
                  const std::string& out, const std::string& csv_dir, bool quiet) {
    RunConfig cfg;
    try {
        if (stages < 1) throw ConfigError("--stages must be at least 1");
        if (bits < MPFR_PREC_MIN || max_bits < bits) throw ConfigError("need 2 <= --bits <= --max-bits");
        cfg.stages = stages;
        cfg.base = base;
        cfg.schedule = parse_schedule(schedule);
        cfg.precision.bits = bits;
        cfg.precision.max_bits = max_bits;
        if (cfg.schedule.rule() == Schedule::Rule::Custom &&
            static_cast<int>(cfg.schedule.targets().size()) < stages - 1)
            throw ConfigError("custom schedule must list l(N) for every N from 2 to --stages");
        // Stage 1 caps are checked before any stage work starts.
        init_stage1(base, bits);
    } catch (const Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    }
    if (!quiet) cfg.log = [](const std::string& s) { std::cerr << s << "\n"; };

    Construction c;
    try {
        c = run(cfg);
    } catch (const Error& e) {
        std::cerr << "construction failed: " << e.what() << "\n";
        return kFail;
    }
    const State st = make_state(cfg, c);
    try {
        save(st, out);
        if (!csv_dir.empty()) {
            std::filesystem::create_directories(csv_dir);
            write_atoms_csv(std::filesystem::path(csv_dir) / "atoms.csv", st);
            write_zeros_csv(std::filesystem::path(csv_dir) / "zeros.csv", st);
        }
    } catch (const std::exception& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kUsage;
    }
    bool ok = true;
    for (const auto& r : c.records) {
        std::cout << "stage " << r.N << ": " << verdict_name(r.verdict()) << "  bits " << r.precision_bits
                  << "  epsilon " << log2_text(r.epsilon) << "  c " << log2_text(r.c_new) << "  delta "
                  << log2_text(r.delta) << "  A " << log2_text(r.basis_const) << "\n";
        for (const auto& cert : r.certificates)
            if (!cert.pass()) {
                std::cout << "  failing certificate: stage " << r.N << " " << cert.label() << "\n";
                ok = false;
            }
    }
    std::cout << "wrote " << out << "\n";
    return ok ? kPass : kFail;
}

int cmd_verify(const std::string& path, bool use_hints) {
    State st;
    try {
        st = load(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    const VerifyReport rep =
        verify_atoms(st.atoms, st.schedule, use_hints ? st.precision_hints() : std::vector<Bits>{}, st.precision);
    for (const auto& r : rep.records) print_certificates(r);
    bool ok = rep.pass;
    if (rep.pass) {
        const StructuralReport s = structural_checks(st.system());
        for (const auto& c : s.checks) std::cout << "  structural  " << c.name << "  " << verdict_name(c.verdict) << "\n";
        ok = s.pass;
    }
    if (ok) {
        std::cout << "verify: PASS (" << rep.records.size() << " stages recomputed from atoms)\n";
        return kPass;
    }
    std::cout << "verify: FAIL " << (rep.first_failure.empty() ? "structural check" : rep.first_failure) << "\n";
    return kFail;
}

int cmd_operator(const std::string& path, int N, const std::string& out_dir, bool quadrature) {
    State st;
    try {
        st = load(path);
        if (N < 1 || N > static_cast<int>(st.stages.size())) throw IndexError("stage " + std::to_string(N) + " is not present");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    const StageRecord& rec = st.stages[static_cast<std::size_t>(N - 1)];
    const ClarkSystem sys(std::vector<Atom>(st.atoms.begin(), st.atoms.begin() + N));
    const Bits bits = std::max<Bits>(512, rec.precision_bits);
    try {
        const DiskOperatorBundle b =
            build_bundle(sys, rec.lambdas, bits, quadrature ? Assembly::Quadrature : Assembly::Analytic);
        const SpectralReport spec = spectral_check(b);
        const ChecklistReport check = grivaux_checklist(b, spec);
        const StructuralReport structure = structural_checks(sys);
        write_operator_outputs(out_dir, st, N, b, spec, check, structure);
        std::cout << "stage " << N << " at " << bits << " bits\n"
                  << "  unitarity |U*U - I|_max <= " << log2_text(spec.unitarity) << "\n"
                  << "  sigma1(T - U) >= " << log2_text(spec.sigma1) << "  sigma2(T - U) <= "
                  << log2_text(spec.sigma2) << "\n"
                  << "  eig(T) vs Cayley(lambda): max error " << spec.max_match_error << ", max ||eig| - 1| "
                  << spec.max_unimodular_error << "\n"
                  << "  eigenvector residual <= " << log2_text(spec.max_residual) << "\n"
                  << "  (i) distinct unimodular: " << (check.unimodular_distinct ? "yes" : "no") << "\n"
                  << "  (ii) frame sigma_min >= " << log2_text(check.frame_sigma_min) << ": "
                  << (check.frame_full_rank ? "rank N" : "not certified") << "\n";
        for (const auto& p : check.partners)
            std::cout << "  (iii) j = " << p.j << ": partner k = " << p.k << ", gap " << log2_text(p.gap) << "\n";
        if (!check.note.empty()) std::cout << "  note: " << check.note << "\n";
        std::cout << "wrote " << out_dir << "\n";
        return check.unimodular_distinct && check.frame_full_rank && structure.pass ? kPass : kFail;
    } catch (const std::exception& e) {
        std::cerr << "operator failed: " << e.what() << "\n";
        return kFail;
    }
}

int cmd_gaps(const std::string& path, int j, const std::string& eps_text, bool cached) {
    State st;
    CertReal eps;
    try {
        eps = parse_epsilon(eps_text);
        if (eps.sign() <= 0) throw ConfigError("epsilon must be positive");
        if (j < 1) throw ConfigError("j must be at least 1");
        st = load(path);
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    }
    std::vector<StageRecord> records = st.stages;
    if (!cached) {
        const VerifyReport rep = verify_atoms(st.atoms, st.schedule, st.precision_hints(), st.precision);
        if (!rep.pass) {
            std::cout << "gaps: stages do not re-verify (" << rep.first_failure << ")\n";
            return kFail;
        }
        records = rep.records;
    }
    try {
        const LimitGapCertificate g = limit_gap(records, st.schedule, j, eps);
        std::cout << "j = " << g.j << "  k = " << g.k << "  stage " << g.stage << "\n"
                  << "  st1 gap " << log2_text(g.st1_gap) << " + tail_j " << log2_text(g.tail_j) << " + tail_k "
                  << log2_text(g.tail_k) << "\n"
                  << "  bound " << log2_text(g.bound) << " (" << g.bound.str(12) << ") vs epsilon "
                  << log2_text(g.epsilon) << ": " << verdict_name(g.verdict) << "\n";
        return g.pass() ? kPass : kFail;
    } catch (const NeedMoreStages& e) {
        std::cout << "NeedMoreStages: " << e.what();
        if (e.required_stages > 0) std::cout << " (required stages: " << e.required_stages << ")";
        std::cout << "\n";
        return kFail;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified construction of Herglotz rank-one models"};
    app.require_subcommand(1);

    int stages = 6;
    BaseParams base;
    long bits = 256, max_bits = 1L << 18;
    std::string schedule = "triangular", out = "state.json", csv_dir;
    bool quiet = false;
    auto* con = app.add_subcommand("construct", "Run the staged construction and write a state file");
    con->add_option("--stages", stages, "Number of stages")->capture_default_str();
    con->add_option("--t1", base.t1, "First atom position")->capture_default_str();
    con->add_option("--mu1", base.mu1, "First atom mass")->capture_default_str();
    con->add_option("--c1", base.c1, "First atom coefficient")->capture_default_str();
    con->add_option("--bits", bits, "Starting precision in bits")->capture_default_str();
    con->add_option("--max-bits", max_bits, "Precision ceiling in bits")->capture_default_str();
    con->add_option("--schedule", schedule, "'triangular' or a comma list l(2),l(3),...")->capture_default_str();
    con->add_option("-o,--output", out, "State file")->capture_default_str();
    con->add_option("--csv-dir", csv_dir, "Also write atoms.csv and zeros.csv here");
    con->add_flag("-q,--quiet", quiet, "Suppress progress messages");

    std::string state_path;
    bool no_hints = false;
    auto* ver = app.add_subcommand("verify", "Recompute every certificate from the atoms");
    ver->add_option("state", state_path, "State file")->required();
    ver->add_flag("--no-hints", no_hints, "Ignore stored per-stage precisions");

    int stage = 0;
    std::string out_dir = "operator_out";
    bool quadrature = false;
    auto* op = app.add_subcommand("operator", "Build the disk operator model of one stage");
    op->add_option("state", state_path, "State file")->required();
    op->add_option("--stage", stage, "Stage N")->required();
    op->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    op->add_flag("--quadrature", quadrature, "Assemble by boundary quadrature instead of the closed form");

    int j = 1;
    std::string eps = "2^-4";
    bool cached = false;
    auto* gp = app.add_subcommand("gaps", "Certify a limit gap partner for zero j");
    gp->add_option("state", state_path, "State file")->required();
    gp->add_option("--j", j, "One-based zero index")->capture_default_str();
    gp->add_option("--epsilon", eps, "Target, decimal or 2^-k")->capture_default_str();
    gp->add_flag("--cached", cached, "Use stored records instead of recomputing them");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*con) return cmd_construct(stages, base, bits, max_bits, schedule, out, csv_dir, quiet);
        if (*ver) return cmd_verify(state_path, !no_hints);
        if (*op) return cmd_operator(state_path, stage, out_dir, quadrature);
        if (*gp) return cmd_gaps(state_path, j, eps, cached);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    }
    return kUsage;
}
