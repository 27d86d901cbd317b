#include "favsites/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "favsites/chains.hpp"
#include "favsites/enumerate.hpp"
#include "favsites/kernels.hpp"
#include "favsites/manifest.hpp"
#include "favsites/profiles.hpp"
#include "favsites/rng.hpp"
#include "favsites/solver.hpp"
#include "favsites/stats.hpp"
#include "favsites/types.hpp"
#include "favsites/walk.hpp"

namespace favsites::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

json rational_json(const Rational& r) {
    json j;
    j["num"] = r.get_num().get_str();
    j["den"] = r.get_den().get_str();
    j["double"] = r.get_d();
    return j;
}

// Accumulates outputs and verdicts for one command, then writes the
// manifest next to the outputs.  The manifest is written whether or not
// the verdicts passed; only the exit code differs.
struct Ctx {
    std::string command;
    std::string out_dir;
    std::string format = "csv";
    uint64_t seed = 0;
    std::map<std::string, std::string> params;
    std::vector<manifest::OutputRecord> outputs;
    std::vector<manifest::VerdictRecord> verdicts;
    std::vector<uint64_t> derived_seeds;
    std::string started;

    std::string path_for(const std::string& name) const {
        return (fs::path(out_dir) / name).string();
    }
    void write_output(const std::string& name, const std::string& content) {
        fs::create_directories(out_dir);
        const std::string p = path_for(name);
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + p);
        f << content;
        f.close();
        outputs.push_back({name, manifest::file_checksum_hex(p),
                           static_cast<uint64_t>(fs::file_size(p))});
    }
    void verdict(const std::string& name, const std::string& v,
                 const std::string& detail) {
        verdicts.push_back({name, v, detail});
    }
    void check(const std::string& name, bool ok, const std::string& detail) {
        verdict(name, ok ? "pass" : "fail", detail);
    }

    int finish() {
        manifest::RunManifest m;
        m.command = command;
        m.params = params;
        m.master_seed = seed;
        m.derived_seeds = derived_seeds;
        m.started_at = started;
        m.finished_at = manifest::now_iso8601();
        m.outputs = outputs;
        m.verdicts = verdicts;
        fs::create_directories(out_dir);
        manifest::save(m, path_for(command + "-manifest.json"));
        bool ok = true;
        for (const auto& v : verdicts) {
            std::cout << command << ": " << v.name << ": " << v.verdict;
            if (!v.detail.empty()) std::cout << " (" << v.detail << ")";
            std::cout << "\n";
            if (v.verdict == "fail") ok = false;
        }
        return ok ? 0 : 1;
    }
};

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            auto a = s.find_first_not_of(ws);
            auto b = s.find_last_not_of(ws);
            return a == std::string::npos ? std::string()
                                          : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

void parse_into(const std::string& s, uint64_t& v) { v = std::stoull(s); }
void parse_into(const std::string& s, int64_t& v) { v = std::stoll(s); }
void parse_into(const std::string& s, int& v) { v = std::stoi(s); }
void parse_into(const std::string& s, std::string& v) { v = s; }

std::vector<int64_t> split_i64(const std::string& s) {
    std::vector<int64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoll(tok));
    return out;
}

std::vector<uint64_t> split_u64(const std::string& s) {
    std::vector<uint64_t> out;
    for (int64_t v : split_i64(s)) {
        if (v < 0) throw CLI::ValidationError("list", "negative entry");
        out.push_back(static_cast<uint64_t>(v));
    }
    return out;
}

std::pair<int64_t, int64_t> parse_window(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--window", "expected LO:HI");
    return {std::stoll(s.substr(0, colon)), std::stoll(s.substr(colon + 1))};
}

std::string verdict_name(stats::Verdict v) {
    switch (v) {
    case stats::Verdict::pass: return "pass";
    case stats::Verdict::fail: return "fail";
    case stats::Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

json chi_json(const stats::ChiSquareReport& r) {
    json j;
    j["stat"] = r.stat;
    j["dof"] = r.dof;
    j["pValue"] = r.p_value;
    j["n"] = r.n;
    j["cells"] = r.cells;
    j["minExpected"] = r.min_expected;
    j["tv"] = r.tv;
    j["verdict"] = verdict_name(r.verdict);
    j["note"] = r.note;
    return j;
}

// ---- subcommand bodies --------------------------------------------------

int cmd_verify_identity(Ctx& ctx, int n) {
    ctx.params["n"] = std::to_string(n);
    auto rep = enumerate::verify_identity_exhaustive(n);
    json j;
    j["n"] = n;
    j["leaves"] = rep.leaves;
    j["violations"] = rep.violations;
    ctx.write_output("identity.json", j.dump(2) + "\n");
    ctx.check("identity-exhaustive", rep.violations == 0,
              "leaves=" + std::to_string(rep.leaves) +
                  " violations=" + std::to_string(rep.violations));
    return ctx.finish();
}

int cmd_kernel(Ctx& ctx, const std::string& kname, int64_t imax, int64_t jmax) {
    ctx.params["kernel"] = kname;
    ctx.params["imax"] = std::to_string(imax);
    ctx.params["jmax"] = std::to_string(jmax);
    auto kid = kernels::parse_kernel(kname);

    if (ctx.format == "json") {
        json rows = json::array();
        for (int64_t i = 0; i <= imax; ++i)
            for (int64_t j = 0; j <= jmax; ++j)
                rows.push_back(
                    {{"i", i}, {"j", j}, {"value", kernels::prob(kid, i, j)}});
        json out;
        out["kernel"] = kname;
        out["rows"] = rows;
        ctx.write_output("kernel-table.json", out.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        csv << "i,j,value\n";
        for (int64_t i = 0; i <= imax; ++i)
            for (int64_t j = 0; j <= jmax; ++j)
                csv << i << "," << j << ","
                    << fmt17(kernels::prob(kid, i, j)) << "\n";
        ctx.write_output("kernel-table.csv", csv.str());
    }

    double min_row = 1.0;
    for (int64_t i = 0; i <= imax; ++i)
        min_row =
            std::min(min_row, kernels::row_sum(kid, static_cast<uint64_t>(i)));
    ctx.check("row-sums", min_row >= 1.0 - 1e-12, "min=" + fmt17(min_row));

    double worst = 0.0;
    int64_t itop = std::min<int64_t>(imax, 40);
    for (int64_t i = 0; i <= itop; ++i) {
        auto closed = kernels::moments_closed(kid, static_cast<uint64_t>(i));
        auto summed = kernels::moments_summed(kid, static_cast<uint64_t>(i));
        worst = std::max(worst, std::abs(closed.mean - summed.mean));
        worst = std::max(worst, std::abs(closed.second - summed.second));
    }
    ctx.check("moment-identities", worst <= 1e-8,
              "max|closed-summed|=" + fmt17(worst));
    return ctx.finish();
}

int cmd_rk_check(Ctx& ctx, int64_t x, int64_t k, uint64_t samples, int n_cap,
                 const std::string& window, const std::string& variant) {
    std::pair<int64_t, int64_t> win =
        window.empty() ? std::pair<int64_t, int64_t>{-2, x + 3}
                       : parse_window(window);
    ctx.params["x"] = std::to_string(x);
    ctx.params["k"] = std::to_string(k);
    ctx.params["samples"] = std::to_string(samples);
    ctx.params["n-cap"] = std::to_string(n_cap);
    ctx.params["window"] =
        std::to_string(win.first) + ":" + std::to_string(win.second);
    ctx.params["variant"] = variant;
    Boundary b = parse_boundary(variant);
    ctx.derived_seeds.push_back(rng::derive_seed(ctx.seed, 0, "rk-coupling"));

    auto rep = chains::rk_coupling_test(x, k, win, samples, n_cap, b, ctx.seed);
    json j;
    j["x"] = x;
    j["k"] = k;
    j["window"] = {win.first, win.second};
    j["samples"] = samples;
    j["nCap"] = n_cap;
    j["variant"] = name(b);
    j["crossingForm"] = chi_json(rep.crossing_form);
    j["vertexForm"] = chi_json(rep.vertex_form);
    j["tvCrossing"] = rep.tv_crossing;
    j["tvVertex"] = rep.tv_vertex;
    j["inconclusive"] = rep.inconclusive;
    ctx.write_output("rk-check.json", j.dump(2) + "\n");

    ctx.verdict("crossing-form", verdict_name(rep.crossing_form.verdict),
                "p=" + fmt17(rep.crossing_form.p_value) +
                    " tv=" + fmt17(rep.tv_crossing));
    ctx.verdict("vertex-form", verdict_name(rep.vertex_form.verdict),
                "p=" + fmt17(rep.vertex_form.p_value) +
                    " tv=" + fmt17(rep.tv_vertex));
    return ctx.finish();
}

int cmd_chain_lab(Ctx& ctx, const std::string& kname, int64_t start, int64_t h,
                  int64_t u, uint64_t len, uint64_t reps, int workers,
                  const std::string& variant) {
    ctx.params["kernel"] = kname;
    ctx.params["start"] = std::to_string(start);
    ctx.params["h"] = std::to_string(h);
    ctx.params["u"] = std::to_string(u);
    ctx.params["len"] = std::to_string(len);
    ctx.params["reps"] = std::to_string(reps);
    ctx.params["workers"] = std::to_string(workers);
    ctx.params["variant"] = variant;
    auto kid = kernels::parse_kernel(kname);
    parse_boundary(variant); // validated and recorded for cross-referencing
    if (start < 0) throw CLI::ValidationError("--start", "must be >= 0");
    if (u > 0 && h < 1)
        throw CLI::ValidationError("--u", "overshoot bound needs --h >= 1");
    if (u > 0 && u < h) throw CLI::ValidationError("--u", "need u >= h");

    ctx.derived_seeds.push_back(rng::derive_seed(ctx.seed, 0, "chain-lab"));
    std::ostringstream csv;
    csv << "replica,reason,t_stop,state_stop,overshoot\n";
    for (uint64_t r = 0; r < reps; ++r) {
        auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(ctx.seed, r, "chain-lab"));
        int64_t z = start;
        uint64_t t = 0;
        std::string reason;
        while (true) {
            if (h > 0 && z >= h) {
                reason = "hit";
                break;
            }
            if (kid == kernels::KernelId::pi && z == 0) {
                reason = "extinct";
                break;
            }
            if (h <= 0 && t >= len) {
                reason = "end";
                break;
            }
            if (t >= 1000000) {
                reason = "capped";
                break;
            }
            z = static_cast<int64_t>(
                kernels::sample(kid, static_cast<uint64_t>(z), g));
            ++t;
        }
        int64_t over = (reason == "hit") ? z - h : 0;
        csv << r << "," << reason << "," << t << "," << z << "," << over
            << "\n";
    }
    ctx.write_output("chain-lab.csv", csv.str());
    ctx.verdict("chain-runs", "info", std::to_string(reps) + " replicas");

    if (h > 0 && u > 0) {
        chains::OvershootResult ov =
            kid == kernels::KernelId::rho
                ? chains::overshoot_experiment_z(h, u, start, reps, ctx.seed)
                : chains::overshoot_experiment_y(h, u, start, reps, ctx.seed);
        if (ov.inconclusive)
            ctx.verdict("overshoot-bound", "inconclusive",
                        "survivors=" + std::to_string(ov.survivors));
        else
            ctx.check("overshoot-bound",
                      ov.lhs <= ov.rhs.get_d() + 3.0 * ov.se,
                      "lhs=" + fmt17(ov.lhs) + " rhs=" +
                          fmt17(ov.rhs.get_d()) + " se=" + fmt17(ov.se));
    }
    if (h > 0 && kid == kernels::KernelId::rho && start < h) {
        auto et = chains::etau_check(h, start, reps, ctx.seed, workers);
        ctx.check("etau-ci-overlap", et.ci_overlap,
                  "tau=" + fmt17(et.tau.mean) +
                      " gain=" + fmt17(et.z_gain.mean));
        ctx.check("etau-lower-bound", et.lower_bound_ok,
                  "tau=" + fmt17(et.tau.mean) +
                      " floor=" + std::to_string(h - start));
    }
    return ctx.finish();
}

int cmd_exact(Ctx& ctx, int64_t NH, const std::string& a_spec,
              const std::string& variant) {
    if (NH <= 0 && a_spec.empty())
        throw CLI::ValidationError("exact", "need --NH and/or --A x,h,k");
    ctx.params["variant"] = variant;
    Boundary b = parse_boundary(variant);
    json out;
    out["variant"] = name(b);
    std::ostringstream csv;
    csv << "kind,h,value\n";

    if (NH > 0) {
        ctx.params["NH"] = std::to_string(NH);
        std::vector<solver::NHTerm> per_h;
        Rational total = solver::exact_NH(NH, b, &per_h);
        json terms = json::array();
        for (const auto& t : per_h) {
            json e;
            e["h"] = t.h;
            e["contribution"] = rational_json(t.contribution);
            terms.push_back(e);
            csv << "per_h," << t.h << ","
                << fmt17(t.contribution.get_d()) << "\n";
        }
        out["NH"] = {{"H", NH}, {"total", rational_json(total)}, {"perH", terms}};
        csv << "total," << NH << "," << fmt17(total.get_d()) << "\n";
    }
    if (!a_spec.empty()) {
        auto v = split_i64(a_spec);
        if (v.size() != 3) throw CLI::ValidationError("--A", "expected x,h,k");
        ctx.params["A"] = a_spec;
        Rational p = solver::exact_A_probability(v[0], v[1], v[2], b);
        out["A"] = {{"x", v[0]}, {"h", v[1]}, {"k", v[2]},
                    {"prob", rational_json(p)}};
        csv << "A_prob," << v[1] << "," << fmt17(p.get_d()) << "\n";
    }
    if (ctx.format == "json")
        ctx.write_output("exact.json", out.dump(2) + "\n");
    else
        ctx.write_output("exact.csv", csv.str());
    ctx.verdict("exact-values", "pass", "computed");
    return ctx.finish();
}

int cmd_simulate(Ctx& ctx, uint64_t steps, int64_t H,
                 const std::string& checkpoints) {
    std::vector<uint64_t> cps;
    if (!checkpoints.empty()) {
        cps = split_u64(checkpoints);
    } else {
        for (uint64_t c = 10; c < steps; c *= 10) cps.push_back(c);
        if (steps > 0) cps.push_back(steps);
    }
    std::string cps_str;
    for (size_t i = 0; i < cps.size(); ++i)
        cps_str += (i ? "," : "") + std::to_string(cps[i]);
    ctx.params["steps"] = std::to_string(steps);
    ctx.params["H"] = std::to_string(H);
    ctx.params["checkpoints"] = cps_str;

    uint64_t wseed = rng::derive_seed(ctx.seed, 0, "simulate");
    ctx.derived_seeds.push_back(wseed);
    walk::StopRule rule;
    rule.kind = walk::StopRule::fixed_steps;
    rule.t_max = steps;
    rule.H = H;
    auto s = walk::simulate(wseed, rule, cps);

    std::ostringstream csv;
    csv << "t,favorite_min_abs,psi\n";
    for (const auto& row : s.transience)
        csv << row.t << "," << row.favorite_min_abs << "," << fmt17(row.psi)
            << "\n";
    ctx.write_output("simulate.csv", csv.str());

    json j;
    j["t"] = s.t;
    j["pos"] = s.pos;
    j["maxLocalTime"] = s.max_local_time;
    j["f"] = s.f;
    j["aHits"] = s.a_hits;
    j["capped"] = s.capped;
    j["identityOk"] = s.identity_ok;
    json hits = json::array();
    for (const auto& h : s.hits)
        hits.push_back({{"x", h.x}, {"h", h.h}, {"k", h.k}, {"t", h.t}});
    j["hits"] = hits;
    ctx.write_output("walk-summary.json", j.dump(2) + "\n");

    ctx.check("identity-spot-checks", s.identity_ok,
              std::to_string(cps.size()) + " checkpoints");
    ctx.verdict("walk", "info",
                "t=" + std::to_string(s.t) +
                    " aHits=" + std::to_string(s.a_hits));
    return ctx.finish();
}

int cmd_moments(Ctx& ctx, const std::string& h_list, uint64_t t_max,
                uint64_t reps, int workers) {
    auto hs = split_i64(h_list);
    if (hs.empty()) throw CLI::ValidationError("--H", "empty H list");
    for (int64_t h : hs)
        if (h < 2) throw CLI::ValidationError("--H", "each H must be >= 2");
    std::string h_str;
    for (size_t i = 0; i < hs.size(); ++i)
        h_str += (i ? "," : "") + std::to_string(hs[i]);
    ctx.params["H"] = h_str;
    ctx.params["t-max"] = std::to_string(t_max);
    ctx.params["reps"] = std::to_string(reps);
    ctx.params["workers"] = std::to_string(workers);
    ctx.derived_seeds.push_back(rng::derive_seed(ctx.seed, 0, "second-moment"));

    std::ostringstream csv;
    csv << "H,mean_NH,var_NH,ratio,near_share,far_share\n";
    json rows = json::array();
    bool any_inconclusive = false;
    for (int64_t H : hs) {
        auto r = profiles::second_moment_diagnostic(H, t_max, reps, ctx.seed,
                                                    workers);
        double var = r.mean_n2 - r.mean_n * r.mean_n;
        csv << H << "," << fmt17(r.mean_n) << "," << fmt17(var) << ","
            << fmt17(r.ratio) << "," << fmt17(r.near_share) << ","
            << fmt17(r.far_share) << "\n";
        rows.push_back({{"H", H},
                        {"meanNH", r.mean_n},
                        {"varNH", var},
                        {"ratio", r.ratio},
                        {"nearShare", r.near_share},
                        {"farShare", r.far_share},
                        {"totalHits", r.total_hits},
                        {"inconclusive", r.inconclusive}});
        if (r.inconclusive) any_inconclusive = true;
        ctx.verdict("H" + std::to_string(H),
                    r.inconclusive ? "inconclusive" : "pass",
                    "hits=" + std::to_string(r.total_hits) +
                        " ratio=" + fmt17(r.ratio));
    }
    if (ctx.format == "json")
        ctx.write_output("moments.json", json({{"rows", rows}}).dump(2) + "\n");
    else
        ctx.write_output("moments.csv", csv.str());
    if (any_inconclusive)
        ctx.verdict("coverage", "inconclusive", "some H had zero hits");
    return ctx.finish();
}

int cmd_report(Ctx& ctx) {
    json j;

    auto id = enumerate::verify_identity_exhaustive(10);
    ctx.check("identity-n10", id.violations == 0,
              "leaves=" + std::to_string(id.leaves));
    j["identityViolations"] = id.violations;

    using kernels::KernelId;
    bool spot = kernels::prob_exact(KernelId::pi, 1, 1) == Rational(1, 4) &&
                kernels::prob_exact(KernelId::pi, 2, 2) == Rational(3, 16) &&
                kernels::prob_exact(KernelId::pi, 0, 0) == Rational(1) &&
                kernels::prob_exact(KernelId::rhostar, 1, 1) == Rational(1, 2);
    ctx.check("kernel-spot-values", spot, "pi/rhostar table entries");
    j["kernelSpot"] = spot;

    solver::AbsorptionSpec pi_spec;
    pi_spec.kernel = KernelId::pi;
    pi_spec.h = 2;
    pi_spec.lower_absorbing = true;
    Rational hp = solver::hitting_probability(pi_spec, 1);
    ctx.check("hitting-probability", hp == Rational(2, 3), hp.get_str());
    j["hit2"] = hp.get_str();

    solver::AbsorptionSpec rho_spec;
    rho_spec.kernel = KernelId::rho;
    rho_spec.h = 2;
    auto ab = solver::expected_absorption(rho_spec, 0);
    ctx.check("expected-absorption", ab.e_tau == Rational(16, 5),
              ab.e_tau.get_str());
    j["etau2"] = ab.e_tau.get_str();

    auto law = enumerate::stopped_profile_law(1, 0, {-1, -1}, 5);
    Rational p0 = law.prob({0});
    Rational p1 = law.prob({1});
    Rational res = law.residual_prob();
    bool bracket = p1 <= Rational(1, 4) && Rational(1, 4) <= p1 + res;
    ctx.check("stopped-law-anchor", p0 == Rational(1, 2) && bracket,
              "P(0)=" + p0.get_str());
    j["stoppedLawP0"] = p0.get_str();

    profiles::CrossingProfile zero;
    zero.x = 1;
    Rational pz = profiles::profile_probability(zero);
    ctx.check("zero-profile", pz == Rational(1, 2), pz.get_str());

    Rational n6 = solver::exact_NH(6);
    Rational n7 = solver::exact_NH(7);
    ctx.check("nh-threshold", n6 == 0 && n7 > 0,
              "NH(6)=" + n6.get_str() + " NH(7)=" + fmt17(n7.get_d()));
    j["NH7"] = rational_json(n7);

    ctx.write_output("report.json", j.dump(2) + "\n");
    return ctx.finish();
}

int cmd_replay(Ctx& ctx, const std::string& manifest_path) {
    ctx.params["manifest"] = manifest_path;
    manifest::RunManifest recorded;
    try {
        recorded = manifest::load(manifest_path);
    } catch (const std::exception& e) {
        throw CLI::ValidationError("replay", e.what());
    }
    if (recorded.command == "replay")
        throw CLI::ValidationError("replay", "cannot replay a replay manifest");

    std::string tmpl =
        (fs::temp_directory_path() / "favsites-replay-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data()))
        throw std::runtime_error("cannot create replay scratch dir");
    std::string fresh_dir(buf.data());

    std::vector<std::string> sub;
    sub.push_back(recorded.command);
    for (const auto& [k, v] : recorded.params)
        sub.push_back("--" + k + "=" + v);
    sub.push_back("--seed=" + std::to_string(recorded.master_seed));
    sub.push_back("--out=" + fresh_dir);
    int rc = run(sub);

    json j;
    j["manifest"] = manifest_path;
    j["freshDir"] = fresh_dir;
    j["rerunExit"] = rc;
    std::vector<std::string> lines;
    if (rc == 2) {
        lines.push_back("re-execution failed with a usage error");
    } else {
        auto fresh = manifest::load(
            (fs::path(fresh_dir) / (recorded.command + "-manifest.json"))
                .string());
        auto diff = manifest::compare_for_replay(recorded, fresh);
        lines = diff.lines;
    }
    j["diff"] = lines;
    ctx.write_output("replay.json", j.dump(2) + "\n");
    for (const auto& l : lines) std::cout << "replay diff: " << l << "\n";
    std::string detail = lines.empty()
                             ? "checksums identical"
                             : std::to_string(lines.size()) + " difference(s)";
    ctx.check("replay", lines.empty(), detail);
    return ctx.finish();
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Crossing profiles, branching chains and favorite-site "
                 "experiments for the simple walk"};
    app.name("favsites");
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");

    // Global options; precedence is flag > config file > default.
    uint64_t seed = 20210607ULL;
    uint64_t reps = 0; // 0 = per-command default
    int workers = 1;
    std::string config_path;
    const char* env_out = std::getenv("FAVSITES_OUT");
    std::string out_dir = env_out ? env_out : ".";
    std::string format = "csv";
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_reps = app.add_option("--reps", reps, "replica count");
    auto* o_workers =
        app.add_option("--workers", workers, "worker threads (values never "
                                             "depend on this, only wall time)");
    app.add_option("--config", config_path, "key=value config file");
    auto* o_out = app.add_option("--out", out_dir, "output directory "
                                                   "(default $FAVSITES_OUT or .)");
    auto* o_format = app.add_option("--format", format, "csv or json")
                         ->check(CLI::IsMember({"csv", "json"}));

    // Per-option config fallback, applied only when the flag is absent.
    std::vector<std::function<void(const std::map<std::string, std::string>&)>>
        appliers;
    auto reg = [&appliers](CLI::Option* opt, const std::string& key, auto& var) {
        appliers.push_back(
            [opt, key, &var](const std::map<std::string, std::string>& kv) {
                auto it = kv.find(key);
                if (opt->count() == 0 && it != kv.end())
                    parse_into(it->second, var);
            });
    };
    reg(o_seed, "seed", seed);
    reg(o_reps, "reps", reps);
    reg(o_workers, "workers", workers);
    reg(o_out, "out", out_dir);
    reg(o_format, "format", format);

    // verify-identity
    auto* sc_vi = app.add_subcommand("verify-identity",
                                     "exhaustive crossing-identity audit");
    sc_vi->fallthrough(true);
    int vi_n = 14;
    reg(sc_vi->add_option("--n", vi_n, "path horizon")
            ->check(CLI::Range(1, 20)),
        "n", vi_n);

    // kernel
    auto* sc_k = app.add_subcommand("kernel", "transition table and row checks");
    sc_k->fallthrough(true);
    std::string k_kernel = "pi";
    int64_t k_imax = 8, k_jmax = 16;
    reg(sc_k->add_option("--kernel", k_kernel, "pi | rho | rhostar"), "kernel",
        k_kernel);
    reg(sc_k->add_option("--imax", k_imax, "max row")
            ->check(CLI::Range(int64_t{0}, int64_t{2000})),
        "imax", k_imax);
    reg(sc_k->add_option("--jmax", k_jmax, "max column")
            ->check(CLI::Range(int64_t{0}, int64_t{4000})),
        "jmax", k_jmax);

    // rk-check
    auto* sc_rk = app.add_subcommand(
        "rk-check", "sampled profile construction vs exact stopped-walk law");
    sc_rk->fallthrough(true);
    int64_t rk_x = 1, rk_k = 0;
    uint64_t rk_samples = 100000;
    int rk_ncap = 20;
    std::string rk_window, rk_variant = "origin-immigration";
    reg(sc_rk->add_option("--x", rk_x, "anchor site")
            ->check(CLI::Range(int64_t{-4}, int64_t{6})),
        "x", rk_x);
    reg(sc_rk->add_option("--k", rk_k, "edge local time")
            ->check(CLI::Range(int64_t{0}, int64_t{6})),
        "k", rk_k);
    reg(sc_rk->add_option("--samples", rk_samples, "profiles sampled"),
        "samples", rk_samples);
    reg(sc_rk->add_option("--n-cap", rk_ncap, "exact-law horizon")
            ->check(CLI::Range(1, 26)),
        "n-cap", rk_ncap);
    reg(sc_rk->add_option("--window", rk_window, "LO:HI (default -2:x+3)"),
        "window", rk_window);
    reg(sc_rk->add_option("--variant", rk_variant,
                          "origin-immigration | verbatim"),
        "variant", rk_variant);

    // chain-lab
    auto* sc_cl = app.add_subcommand("chain-lab",
                                     "offspring-chain stopping experiments");
    sc_cl->fallthrough(true);
    std::string cl_kernel = "rho", cl_variant = "origin-immigration";
    int64_t cl_start = 0, cl_h = 0, cl_u = 0;
    uint64_t cl_len = 32;
    reg(sc_cl->add_option("--kernel", cl_kernel, "pi | rho | rhostar"),
        "kernel", cl_kernel);
    reg(sc_cl->add_option("--start", cl_start, "initial state"), "start",
        cl_start);
    reg(sc_cl->add_option("--h", cl_h, "absorption threshold (0 = fixed run)"),
        "h", cl_h);
    reg(sc_cl->add_option("--u", cl_u, "overshoot level (0 = off)"), "u", cl_u);
    reg(sc_cl->add_option("--len", cl_len, "fixed run length when h = 0"),
        "len", cl_len);
    reg(sc_cl->add_option("--variant", cl_variant,
                          "origin-immigration | verbatim (recorded)"),
        "variant", cl_variant);

    // exact
    auto* sc_ex = app.add_subcommand("exact", "exact event and count values");
    sc_ex->fallthrough(true);
    int64_t ex_nh = 0;
    std::string ex_a, ex_variant = "origin-immigration";
    reg(sc_ex->add_option("--NH", ex_nh, "expected count up to height H")
            ->check(CLI::Range(int64_t{0}, int64_t{64})),
        "NH", ex_nh);
    reg(sc_ex->add_option("--A", ex_a, "single event probability: x,h,k"), "A",
        ex_a);
    reg(sc_ex->add_option("--variant", ex_variant,
                          "origin-immigration | verbatim"),
        "variant", ex_variant);

    // simulate
    auto* sc_sim = app.add_subcommand("simulate", "one seeded walk");
    sc_sim->fallthrough(true);
    uint64_t sim_steps = 1000;
    int64_t sim_H = 64;
    std::string sim_cps;
    reg(sc_sim->add_option("--steps", sim_steps, "walk length"), "steps",
        sim_steps);
    reg(sc_sim->add_option("--H", sim_H, "event height ceiling"), "H", sim_H);
    reg(sc_sim->add_option("--checkpoints", sim_cps,
                           "comma-separated times (default decades)"),
        "checkpoints", sim_cps);

    // moments
    auto* sc_mo = app.add_subcommand(
        "moments", "sampled first/second moment table over H");
    sc_mo->fallthrough(true);
    std::string mo_h = "30,50";
    uint64_t mo_tmax = 30000;
    reg(sc_mo->add_option("--H", mo_h, "comma-separated H list"), "H", mo_h);
    reg(sc_mo->add_option("--t-max", mo_tmax, "steps per replica"), "t-max",
        mo_tmax);

    // report
    auto* sc_rep = app.add_subcommand("report", "small cross-module battery");
    sc_rep->fallthrough(true);

    // replay
    auto* sc_re = app.add_subcommand("replay", "re-run a manifest and compare");
    sc_re->fallthrough(true);
    std::string re_manifest;
    sc_re->add_option("manifest", re_manifest, "path to a run manifest")
        ->required();

    // Long-only help everywhere: chain-lab's --h must not shadow -h.
    for (auto* sc : app.get_subcommands([](CLI::App*) { return true; }))
        sc->set_help_flag("--help", "print help");

    // ---- parse -----------------------------------------------------------
    std::vector<std::string> full;
    full.push_back("favsites");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(full.size());
    for (auto& s : full) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());

        if (!config_path.empty()) {
            auto kv = read_config(config_path);
            for (auto& f : appliers) f(kv);
        }

        Ctx ctx;
        ctx.out_dir = out_dir;
        ctx.format = format;
        ctx.seed = seed;
        ctx.started = manifest::now_iso8601();
        ctx.params["format"] = format;

        if (app.got_subcommand(sc_vi)) {
            ctx.command = "verify-identity";
            ctx.params.erase("format");
            return cmd_verify_identity(ctx, vi_n);
        }
        if (app.got_subcommand(sc_k)) {
            ctx.command = "kernel";
            return cmd_kernel(ctx, k_kernel, k_imax, k_jmax);
        }
        if (app.got_subcommand(sc_rk)) {
            ctx.command = "rk-check";
            ctx.params.erase("format");
            return cmd_rk_check(ctx, rk_x, rk_k, rk_samples, rk_ncap, rk_window,
                                rk_variant);
        }
        if (app.got_subcommand(sc_cl)) {
            ctx.command = "chain-lab";
            ctx.params.erase("format");
            uint64_t r = reps ? reps : 10000;
            return cmd_chain_lab(ctx, cl_kernel, cl_start, cl_h, cl_u, cl_len,
                                 r, workers, cl_variant);
        }
        if (app.got_subcommand(sc_ex)) {
            ctx.command = "exact";
            return cmd_exact(ctx, ex_nh, ex_a, ex_variant);
        }
        if (app.got_subcommand(sc_sim)) {
            ctx.command = "simulate";
            ctx.params.erase("format");
            return cmd_simulate(ctx, sim_steps, sim_H, sim_cps);
        }
        if (app.got_subcommand(sc_mo)) {
            ctx.command = "moments";
            uint64_t r = reps ? reps : 20000;
            return cmd_moments(ctx, mo_h, mo_tmax, r, workers);
        }
        if (app.got_subcommand(sc_rep)) {
            ctx.command = "report";
            ctx.params.erase("format");
            return cmd_report(ctx);
        }
        if (app.got_subcommand(sc_re)) {
            ctx.command = "replay";
            ctx.params.erase("format");
            return cmd_replay(ctx, re_manifest);
        }
        std::cerr << app.help();
        return 2;
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "favsites: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "favsites: invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "favsites: error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace favsites::cli
