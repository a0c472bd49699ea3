#include "hrank/state.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hrank {

using Json = nlohmann::ordered_json;

namespace {

constexpr Bits kCertBits = 128;

Json num(const CertReal& x) {
    Json j;
    j["mid"] = x.mid().to_decimal();
    j["rad"] = x.rad().to_decimal();
    j["p"] = static_cast<long>(x.prec());
    return j;
}

CertReal round_up(const CertReal& x) {
    Mpfr m(kCertBits);
    mpfr_set(m.get(), x.hi().get(), MPFR_RNDU);
    return CertReal::from_mpfr(m);
}

CertReal round_down(const CertReal& x) {
    Mpfr m(kCertBits);
    mpfr_set(m.get(), x.lo().get(), MPFR_RNDD);
    return CertReal::from_mpfr(m);
}

Verdict verdict_from(const std::string& s) {
    if (s == "PASS") return Verdict::Pass;
    if (s == "FAIL") return Verdict::Fail;
    if (s == "UNDECIDABLE") return Verdict::Undecidable;
    throw SchemaError("unknown verdict " + s);
}

Json cert_json(const Certificate& c) {
    Json j;
    j["name"] = c.name;
    j["part"] = c.part;
    j["index"] = c.index;
    j["lhs_upper"] = num(round_up(c.lhs_upper));
    j["rhs_lower"] = num(round_down(c.rhs_lower));
    j["margin"] = num(c.margin.prec() > kCertBits ? c.margin.at(kCertBits) : c.margin);
    j["precision_bits"] = static_cast<long>(c.precision_bits);
    j["verdict"] = verdict_name(c.verdict);
    return j;
}

Json stage_json(const StageRecord& r) {
    Json j;
    j["N"] = r.N;
    j["precision_bits"] = static_cast<long>(r.precision_bits);
    j["schedule_target"] = r.schedule_target;
    j["epsilon"] = num(r.epsilon);
    j["t_new"] = num(r.t_new);
    j["mu_new"] = num(r.mu_new);
    j["c_new"] = num(r.c_new);
    j["delta"] = num(r.delta);
    j["basis_const"] = num(r.basis_const);
    Json zeros = Json::array();
    for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
        Json z;
        z["j"] = static_cast<int>(k) + 1;
        z["lambda"] = num(r.lambdas[k]);
        z["interval"] = k < r.interval_of.size() ? r.interval_of[k] : -1;
        zeros.push_back(std::move(z));
    }
    j["zeros"] = std::move(zeros);
    Json certs = Json::array();
    for (const auto& c : r.certificates) certs.push_back(cert_json(c));
    j["certificates"] = std::move(certs);
    return j;
}

// Field access that reports the path on failure.
const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + " is not an object");
    const auto it = j.find(key);
    if (it == j.end()) throw SchemaError("missing field " + where + "." + key);
    return *it;
}

long integer(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    if (!v.is_number_integer()) throw SchemaError(where + "." + key + " is not an integer");
    return v.get<long>();
}

std::string text(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    if (!v.is_string()) throw SchemaError(where + "." + key + " is not a string");
    return v.get<std::string>();
}

CertReal number(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    const std::string w = where + "." + key;
    const std::string mid = text(v, "mid", w), rad = text(v, "rad", w);
    const long p = integer(v, "p", w);
    if (p < MPFR_PREC_MIN || p > (1L << 24)) throw SchemaError(w + ".p out of range");
    try {
        return CertReal::from_ball(mid, rad, p);
    } catch (const Error& e) {
        throw SchemaError(w + ": " + e.what());
    }
}

const Json& array(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    if (!v.is_array()) throw SchemaError(where + "." + key + " is not an array");
    return v;
}

Certificate parse_cert(const Json& j, const std::string& where) {
    Certificate c;
    c.name = text(j, "name", where);
    c.part = text(j, "part", where);
    c.index = static_cast<int>(integer(j, "index", where));
    c.lhs_upper = number(j, "lhs_upper", where);
    c.rhs_lower = number(j, "rhs_lower", where);
    c.margin = number(j, "margin", where);
    c.precision_bits = integer(j, "precision_bits", where);
    c.verdict = verdict_from(text(j, "verdict", where));
    return c;
}

StageRecord parse_stage(const Json& j, const std::string& where) {
    StageRecord r;
    r.N = static_cast<int>(integer(j, "N", where));
    r.precision_bits = integer(j, "precision_bits", where);
    r.schedule_target = static_cast<int>(integer(j, "schedule_target", where));
    r.epsilon = number(j, "epsilon", where);
    r.t_new = number(j, "t_new", where);
    r.mu_new = number(j, "mu_new", where);
    r.c_new = number(j, "c_new", where);
    r.delta = number(j, "delta", where);
    r.basis_const = number(j, "basis_const", where);
    const Json& zeros = array(j, "zeros", where);
    for (std::size_t k = 0; k < zeros.size(); ++k) {
        const std::string w = where + ".zeros[" + std::to_string(k) + "]";
        if (integer(zeros[k], "j", w) != static_cast<long>(k) + 1) throw SchemaError(w + ".j out of order");
        r.lambdas.push_back(number(zeros[k], "lambda", w));
        r.interval_of.push_back(static_cast<int>(integer(zeros[k], "interval", w)));
    }
    // Cached certificates are informational and may be absent.
    if (!j.contains("certificates")) return r;
    const Json& certs = array(j, "certificates", where);
    for (std::size_t k = 0; k < certs.size(); ++k)
        r.certificates.push_back(parse_cert(certs[k], where + ".certificates[" + std::to_string(k) + "]"));
    return r;
}

std::string digits40(const CertReal& x) {
    char* s = nullptr;
    mpfr_asprintf(&s, "%.40Rg", x.mid().get());
    std::string out(s);
    mpfr_free_str(s);
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    return f;
}

const StageRecord& stage_at(const State& s, int N) {
    if (N < 1 || N > static_cast<int>(s.stages.size()) || N > static_cast<int>(s.atoms.size()))
        throw IndexError("stage " + std::to_string(N) + " is not present");
    return s.stages[static_cast<std::size_t>(N - 1)];
}

ClarkSystem first_atoms(const State& s, int N) {
    return ClarkSystem(std::vector<Atom>(s.atoms.begin(), s.atoms.begin() + N));
}

Json complex_json(const CertComplex& z) { return Json::array({digits40(z.re()), digits40(z.im())}); }

Json matrix_json(const CMatrix& M) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < M.rows(); ++r) {
        Json row = Json::array();
        for (std::size_t c = 0; c < M.cols(); ++c) row.push_back(complex_json(M(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json ball_summary(const CertReal& x) {
    Json j;
    j["value"] = digits40(x);
    j["log2"] = mpfr_zero_p(x.mid().get()) ? 0.0 : x.log2_abs();
    return j;
}

}  // namespace

ClarkSystem State::system() const { return ClarkSystem(atoms); }

std::vector<Bits> State::precision_hints() const {
    std::vector<Bits> h;
    for (const auto& r : stages) h.push_back(r.precision_bits);
    return h;
}

State make_state(const RunConfig& config, const Construction& c) {
    State s;
    s.precision = config.precision;
    s.schedule = config.schedule;
    s.base = config.base;
    s.atoms = c.sys.atoms();
    s.stages = c.records;
    return s;
}

std::string serialize(const State& s) {
    Json root;
    Json& meta = root["meta"];
    meta["version"] = s.version;
    meta["precision"]["bits"] = static_cast<long>(s.precision.bits);
    meta["precision"]["max_bits"] = static_cast<long>(s.precision.max_bits);
    meta["precision"]["escalation_factor"] = s.precision.escalation_factor;
    meta["schedule"]["rule"] = s.schedule.name();
    meta["schedule"]["targets"] = s.schedule.targets();
    meta["base"]["t1"] = s.base.t1;
    meta["base"]["mu1"] = s.base.mu1;
    meta["base"]["c1"] = s.base.c1;
    meta["stages"] = static_cast<int>(s.atoms.size());

    Json atoms = Json::array();
    for (std::size_t n = 0; n < s.atoms.size(); ++n) {
        Json a;
        a["n"] = static_cast<int>(n) + 1;
        a["t"] = num(s.atoms[n].t);
        a["mu"] = num(s.atoms[n].mu);
        a["c"] = num(s.atoms[n].c);
        atoms.push_back(std::move(a));
    }
    root["atoms"] = std::move(atoms);
    Json stages = Json::array();
    for (const auto& r : s.stages) stages.push_back(stage_json(r));
    root["stages"] = std::move(stages);
    return root.dump(2) + "\n";
}

State parse(const std::string& input) {
    Json root;
    try {
        root = Json::parse(input);
    } catch (const Json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    State s;
    const Json& meta = field(root, "meta", "root");
    s.version = static_cast<int>(integer(meta, "version", "meta"));
    if (s.version != kStateVersion) throw SchemaError("unsupported state version " + std::to_string(s.version));
    const Json& prec = field(meta, "precision", "meta");
    s.precision.bits = integer(prec, "bits", "meta.precision");
    s.precision.max_bits = integer(prec, "max_bits", "meta.precision");
    s.precision.escalation_factor = static_cast<int>(integer(prec, "escalation_factor", "meta.precision"));
    if (s.precision.bits < MPFR_PREC_MIN || s.precision.max_bits < s.precision.bits ||
        s.precision.escalation_factor < 2)
        throw SchemaError("meta.precision is inconsistent");

    const Json& sched = field(meta, "schedule", "meta");
    const std::string rule = text(sched, "rule", "meta.schedule");
    const Json& targets = array(sched, "targets", "meta.schedule");
    std::vector<int> tl;
    for (const auto& t : targets) {
        if (!t.is_number_integer()) throw SchemaError("meta.schedule.targets holds a non-integer");
        tl.push_back(t.get<int>());
    }
    if (rule == "triangular") {
        if (!tl.empty()) throw SchemaError("triangular schedule takes no targets");
        s.schedule = Schedule::triangular();
    } else if (rule == "custom") {
        try {
            s.schedule = Schedule::custom(tl);
        } catch (const Error& e) {
            throw SchemaError(std::string("meta.schedule: ") + e.what());
        }
    } else {
        throw SchemaError("unknown schedule rule " + rule);
    }
    const Json& base = field(meta, "base", "meta");
    s.base.t1 = text(base, "t1", "meta.base");
    s.base.mu1 = text(base, "mu1", "meta.base");
    s.base.c1 = text(base, "c1", "meta.base");
    const long count = integer(meta, "stages", "meta");

    const Json& atoms = array(root, "atoms", "root");
    for (std::size_t n = 0; n < atoms.size(); ++n) {
        const std::string w = "atoms[" + std::to_string(n) + "]";
        if (integer(atoms[n], "n", w) != static_cast<long>(n) + 1) throw SchemaError(w + ".n out of order");
        s.atoms.push_back(Atom{number(atoms[n], "t", w), number(atoms[n], "mu", w), number(atoms[n], "c", w)});
    }
    if (count != static_cast<long>(s.atoms.size())) throw SchemaError("meta.stages differs from the atom count");

    const Json& stages = array(root, "stages", "root");
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const std::string w = "stages[" + std::to_string(k) + "]";
        StageRecord r = parse_stage(stages[k], w);
        if (r.N != static_cast<int>(k) + 1) throw SchemaError(w + ".N out of order");
        s.stages.push_back(std::move(r));
    }
    if (s.stages.size() > s.atoms.size()) throw SchemaError("more stages than atoms");
    return s;
}

void save(const State& s, const std::filesystem::path& path) {
    auto f = open_out(path);
    f << serialize(s);
    if (!f) throw Error("cannot write " + path.string());
}

State load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void write_atoms_csv(const std::filesystem::path& path, const State& s) {
    auto f = open_out(path);
    f << "n,t,mu,c\n";
    for (std::size_t n = 0; n < s.atoms.size(); ++n)
        f << n + 1 << ',' << s.atoms[n].t.mid().to_decimal() << ',' << s.atoms[n].mu.mid().to_decimal() << ','
          << s.atoms[n].c.mid().to_decimal() << '\n';
}

void write_zeros_csv(const std::filesystem::path& path, const State& s) {
    auto f = open_out(path);
    f << "stage,j,lambda\n";
    for (const auto& r : s.stages)
        for (std::size_t j = 0; j < r.lambdas.size(); ++j) f << r.N << ',' << j + 1 << ',' << digits40(r.lambdas[j]) << '\n';
}

void write_gaps_csv(const std::filesystem::path& path, const State& s, int N) {
    const StageRecord& r = stage_at(s, N);
    const ClarkSystem sys = first_atoms(s, N);
    auto f = open_out(path);
    f << "j,k,gap\n";
    for (std::size_t j = 0; j < r.lambdas.size(); ++j)
        for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
            if (j == k) continue;
            f << j + 1 << ',' << k + 1 << ',' << digits40(pairwise_gap(sys, r.lambdas, j, k).gap) << '\n';
        }
}

void write_operator_outputs(const std::filesystem::path& dir, const State& s, int N, const DiskOperatorBundle& b,
                            const SpectralReport& spec, const ChecklistReport& check,
                            const StructuralReport& structure) {
    std::filesystem::create_directories(dir);
    const std::size_t n = b.tau.size();

    {
        auto f = open_out(dir / "disk.csv");
        f << "n,re_tau,im_tau,sigma\n";
        for (std::size_t k = 0; k < n; ++k)
            f << k + 1 << ',' << digits40(b.tau[k].re()) << ',' << digits40(b.tau[k].im()) << ','
              << digits40(b.sigma[k]) << '\n';
    }
    {
        auto f = open_out(dir / "spectrum.csv");
        f << "j,re_Lambda,im_Lambda,residual\n";
        for (std::size_t j = 0; j < n; ++j)
            f << j + 1 << ',' << digits40(b.Lambda[j].re()) << ',' << digits40(b.Lambda[j].im()) << ','
              << digits40(spec.residuals[j]) << '\n';
    }
    {
        auto f = open_out(dir / "singular.csv");
        f << "k,sigma\n";
        for (std::size_t k = 0; k < spec.singular.size(); ++k) f << k + 1 << ',' << digits40(spec.singular[k]) << '\n';
    }
    write_gaps_csv(dir / "gaps.csv", s, N);
    write_atoms_csv(dir / "atoms.csv", s);
    write_zeros_csv(dir / "zeros.csv", s);

    Json rep;
    rep["stage"] = N;
    rep["precision_bits"] = static_cast<long>(b.precision);
    rep["T"] = matrix_json(b.T);
    rep["U"] = matrix_json(b.U);
    Json eig = Json::array();
    for (std::size_t k = 0; k < spec.eig_T.size(); ++k) {
        Json e;
        e["value"] = complex_json(spec.eig_T[k]);
        e["matches_j"] = spec.match[k] + 1;
        eig.push_back(std::move(e));
    }
    rep["eigenvalues_T"] = std::move(eig);
    rep["max_match_error"] = spec.max_match_error;
    rep["max_unimodular_error"] = spec.max_unimodular_error;
    rep["max_residual"] = ball_summary(spec.max_residual);
    rep["lambda_unimodular"] = ball_summary(spec.lambda_unimodular);
    rep["min_lambda_gap"] = ball_summary(spec.min_lambda_gap);
    rep["unitarity"] = ball_summary(spec.unitarity);
    rep["sigma1_lower"] = ball_summary(spec.sigma1);
    rep["sigma2_upper"] = ball_summary(spec.sigma2);
    rep["distinct"] = spec.distinct;

    Json cl;
    cl["unimodular_distinct"] = check.unimodular_distinct;
    cl["frame_sigma_min"] = ball_summary(check.frame_sigma_min);
    cl["frame_full_rank"] = check.frame_full_rank;
    Json partners = Json::array();
    for (const auto& p : check.partners) {
        Json q;
        q["j"] = p.j;
        q["k"] = p.k;
        q["gap"] = ball_summary(p.gap);
        partners.push_back(std::move(q));
    }
    cl["partners"] = std::move(partners);
    cl["gaps_vacuous"] = check.gaps_vacuous;
    cl["note"] = check.note;
    rep["checklist"] = std::move(cl);

    Json st = Json::array();
    for (const auto& c : structure.checks) {
        Json q;
        q["name"] = c.name;
        q["verdict"] = verdict_name(c.verdict);
        st.push_back(std::move(q));
    }
    rep["structural"] = std::move(st);

    auto f = open_out(dir / "report.json");
    f << rep.dump(2) << '\n';
}

}  // namespace hrank
