#include "symflow/run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "symflow/errors.hpp"
#include "symflow/perelman.hpp"

namespace symflow {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ================================================================ config ====

namespace {

[[noreturn]] void config_fail(const std::string& msg, const std::string& pointer) {
    throw ConfigError(msg, pointer);
}

const ordered_json& fetch(const ordered_json& j, const std::string& key,
                          const std::string& pointer) {
    if (!j.is_object() || !j.contains(key)) config_fail("missing required key", pointer);
    return j.at(key);
}

std::string fetch_string(const ordered_json& j, const std::string& key,
                         const std::string& pointer) {
    const auto& v = fetch(j, key, pointer);
    if (!v.is_string()) config_fail("expected a string", pointer);
    return v.get<std::string>();
}

Expr parse_config_expr(const std::string& src, const std::vector<std::string>& vars,
                       const std::string& pointer) {
    try {
        return parse_expr(src, vars);
    } catch (const Error& e) {
        config_fail(std::string("bad expression: ") + e.what(), pointer);
    }
}

HomogeneousSpaceData resolve_space(const std::string& name) {
    try {
        return structure_constants(catalog_lookup(name), name);
    } catch (const UnknownSpace&) {
        // fall through to the file interpretation
    }
    if (!fs::exists(name)) {
        config_fail("not a catalog space and no such file", "/space");
    }
    try {
        return structure_constants(load_bracket_table(name), name);
    } catch (const Error& e) {
        config_fail(std::string("bad bracket table: ") + e.what(), "/space");
    }
}

std::vector<std::string> bc_variables(int n) {
    std::vector<std::string> vars = {"t"};
    for (int i = 0; i < n; ++i) vars.push_back("u" + std::to_string(i + 1));
    return vars;
}

BCSpec resolve_bc(const ordered_json& j, int n) {
    if (j.is_string()) {
        if (j.get<std::string>() == "totally_geodesic") return BCSpec::totally_geodesic(n);
        config_fail("unknown boundary preset (want \"totally_geodesic\")", "/bc");
    }
    if (!j.is_object()) config_fail("expected a preset string or an object", "/bc");
    if (j.contains("shen_lambda")) {
        const auto& v = j.at("shen_lambda");
        if (!v.is_string()) config_fail("expected an expression string", "/bc/shen_lambda");
        return BCSpec::shen(
            parse_config_expr(v.get<std::string>(), {"t"}, "/bc/shen_lambda"), n);
    }
    if (!j.contains("F")) config_fail("expected \"F\", \"shen_lambda\" or a preset", "/bc");
    const auto& F = j.at("F");
    if (!F.is_array() || F.size() != 2) config_fail("expected two rows (one per end)", "/bc/F");
    BCSpec bc;
    const auto vars = bc_variables(n);
    for (int end = 0; end < 2; ++end) {
        const auto& row = F.at(end);
        const std::string rp = "/bc/F/" + std::to_string(end);
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            config_fail("expected " + std::to_string(n) + " entries (one per summand)", rp);
        for (int i = 0; i < n; ++i) {
            const auto& cell = row.at(i);
            const std::string cp = rp + "/" + std::to_string(i);
            if (!cell.is_string()) config_fail("expected an expression string", cp);
            bc.F[end].push_back(parse_config_expr(cell.get<std::string>(), vars, cp));
        }
    }
    return bc;
}

ordered_json echo_solver(const SolverConfig& s) {
    ordered_json j;
    j["N"] = s.N;
    j["t_end"] = s.t_end;
    j["cfl"] = s.cfl;
    j["min_scale"] = s.min_scale;
    if (s.snapshot_every > 0)
        j["snapshot_every"] = s.snapshot_every;
    else
        j["snapshot_dt"] = s.snapshot_dt;
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& origin) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        config_fail(origin + ": " + e.what(), "/");
    }
    if (!doc.is_object()) config_fail("top-level value must be an object", "/");

    RunConfig cfg;
    cfg.space_name = fetch_string(doc, "space", "/space");
    cfg.space = resolve_space(cfg.space_name);
    const int n = cfg.space.n();

    // solver block (all fields optional, defaulted by SolverConfig)
    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        if (!s.is_object()) config_fail("expected an object", "/solver");
        auto num = [&](const char* key, double& out) {
            if (!s.contains(key)) return;
            if (!s.at(key).is_number()) config_fail("expected a number", std::string("/solver/") + key);
            out = s.at(key).get<double>();
        };
        if (s.contains("N")) {
            if (!s.at("N").is_number_integer()) config_fail("expected an integer", "/solver/N");
            cfg.solver.N = s.at("N").get<int>();
        }
        num("t_end", cfg.solver.t_end);
        num("cfl", cfg.solver.cfl);
        num("min_scale", cfg.solver.min_scale);
        num("snapshot_dt", cfg.solver.snapshot_dt);
        if (s.contains("snapshot_every")) {
            if (!s.at("snapshot_every").is_number_integer())
                config_fail("expected an integer", "/solver/snapshot_every");
            cfg.solver.snapshot_every = s.at("snapshot_every").get<int>();
        }
    }
    try {
        cfg.solver.validate();
    } catch (const Error& e) {
        config_fail(e.what(), "/solver");
    }

    // initial profiles
    const auto& init = fetch(doc, "init", "/init");
    cfg.init.h = parse_config_expr(fetch_string(init, "h", "/init/h"), {"r"}, "/init/h");
    const auto& flist = fetch(init, "f", "/init/f");
    if (!flist.is_array() || static_cast<int>(flist.size()) != n)
        config_fail("expected " + std::to_string(n) + " profile strings for space '" +
                        cfg.space_name + "'",
                    "/init/f");
    for (int i = 0; i < n; ++i) {
        const auto& cell = flist.at(i);
        const std::string cp = "/init/f/" + std::to_string(i);
        if (!cell.is_string()) config_fail("expected an expression string", cp);
        cfg.init.f.push_back(parse_config_expr(cell.get<std::string>(), {"r"}, cp));
    }
    try {
        cfg.init.sample(cfg.solver.N);  // positivity of the profiles on the grid
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        config_fail(std::string("bad initial profiles: ") + e.what(), "/init");
    }

    cfg.bc = resolve_bc(fetch(doc, "bc", "/bc"), n);

    if (doc.contains("pipeline")) {
        const auto& p = doc.at("pipeline");
        if (!p.is_object()) config_fail("expected an object", "/pipeline");
        auto flag = [&](const char* key, bool& out) {
            if (!p.contains(key)) return;
            if (!p.at(key).is_boolean())
                config_fail("expected a boolean", std::string("/pipeline/") + key);
            out = p.at(key).get<bool>();
        };
        flag("gauge", cfg.run_gauge);
        flag("perelman", cfg.run_perelman);
    }
    if (cfg.run_perelman && !cfg.run_gauge)
        config_fail("the conjugate-heat stage needs the gauge stage", "/pipeline/perelman");

    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        if (!o.is_object()) config_fail("expected an object", "/output");
        if (o.contains("dir")) {
            if (!o.at("dir").is_string()) config_fail("expected a string", "/output/dir");
            cfg.out_dir = o.at("dir").get<std::string>();
        }
        if (o.contains("formats")) {
            const auto& fm = o.at("formats");
            if (!fm.is_array()) config_fail("expected an array", "/output/formats");
            cfg.formats.clear();
            for (std::size_t i = 0; i < fm.size(); ++i) {
                if (!fm.at(i).is_string())
                    config_fail("expected a string", "/output/formats/" + std::to_string(i));
                const std::string f = fm.at(i).get<std::string>();
                if (f != "csv" && f != "json")
                    config_fail("unknown format '" + f + "' (want csv or json)",
                                "/output/formats/" + std::to_string(i));
                cfg.formats.push_back(f);
            }
        }
    }

    // compatibility gate: refuse data that violates the boundary law at t = 0
    const auto residuals = check_compatibility(cfg.bc, cfg.init);
    if (!compatible(residuals)) {
        std::ostringstream msg;
        msg << "initial profiles violate the boundary law at t = 0;";
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < n; ++i)
                msg << " res[" << j << "][" << i << "] = " << residuals[j][i];
        throw IncompatibleData(msg.str(), residuals);
    }

    // normalized echo with defaults filled in
    ordered_json norm;
    norm["space"] = cfg.space_name;
    norm["solver"] = echo_solver(cfg.solver);
    norm["init"] = ordered_json::object();
    norm["init"]["h"] = cfg.init.h.str();
    norm["init"]["f"] = ordered_json::array();
    for (const Expr& f : cfg.init.f) norm["init"]["f"].push_back(f.str());
    {
        const auto& bc_in = doc.at("bc");
        if (bc_in.is_string()) {
            norm["bc"] = bc_in.get<std::string>();
        } else if (bc_in.contains("shen_lambda")) {
            norm["bc"] = ordered_json::object();
            norm["bc"]["shen_lambda"] = bc_in.at("shen_lambda").get<std::string>();
        } else {
            norm["bc"] = ordered_json::object();
            auto rows = ordered_json::array();
            for (int j = 0; j < 2; ++j) {
                auto row = ordered_json::array();
                for (const Expr& e : cfg.bc.F[j]) row.push_back(e.str());
                rows.push_back(row);
            }
            norm["bc"]["F"] = rows;
        }
    }
    norm["pipeline"] = ordered_json::object();
    norm["pipeline"]["gauge"] = cfg.run_gauge;
    norm["pipeline"]["perelman"] = cfg.run_perelman;
    norm["output"] = ordered_json::object();
    norm["output"]["dir"] = cfg.out_dir.string();
    norm["output"]["formats"] = cfg.formats;
    cfg.document = norm.dump(2) + "\n";
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) config_fail("cannot read config file '" + path.string() + "'", "/");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

// ================================================================== run =====

namespace {

// 17 significant digits: enough to reproduce any double exactly.
std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const fs::path& target, const std::string& text) {
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) throw Error("cannot write " + target.string());
    }
    fs::rename(tmp, target);
}

ordered_json series(const std::vector<double>& v) {
    auto arr = ordered_json::array();
    for (double x : v) arr.push_back(x);
    return arr;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);

    const bool want_csv =
        std::find(cfg.formats.begin(), cfg.formats.end(), "csv") != cfg.formats.end();
    const bool want_json =
        std::find(cfg.formats.begin(), cfg.formats.end(), "json") != cfg.formats.end();

    ordered_json manifest;
    manifest["config"] = ordered_json::parse(cfg.document);
    manifest["code_version"] = "symflow 0.1.0";
    manifest["grid"] = {{"N", cfg.solver.N}, {"dr", 1.0 / cfg.solver.N}};
    auto files = ordered_json::array();
    ordered_json metrics = ordered_json::object();

    RunResult result;
    result.dir = cfg.out_dir;

    Trajectory traj;
    std::optional<MRFPair> pair;
    std::optional<MRFResidual> mres;
    std::optional<MonotonicityReport> mono;
    std::optional<FlowResidual> fres;
    std::string perelman_note;

    try {
        traj = solve(cfg.solver, cfg.space, cfg.bc, cfg.init);
        if (cfg.run_gauge) solve_gauge(traj, cfg.space, cfg.init);
        if (cfg.run_gauge && traj.times.size() >= 3)
            fres = ricci_flow_residual(traj, cfg.space);

        if (cfg.run_perelman && traj.singular) {
            perelman_note = "skipped: trajectory singular before t_end";
        } else if (cfg.run_perelman && traj.times.size() < 3) {
            perelman_note = "skipped: need at least three snapshots";
        } else if (cfg.run_perelman) {
            const auto ptilde = solve_backward_p(traj, cfg.space, cfg.solver.cfl);
            const auto psi = solve_psi(traj, ptilde);
            pair = assemble_mrf(traj, ptilde, psi);
            mres = mrf_residual(*pair, cfg.space);
            mono = monotonicity_report(*pair, cfg.space, /*strict=*/true);
        }
        result.status = traj.singular ? "singular" : "ok";
        result.exit_code = 0;
    } catch (const IncompatibleData& e) {
        result.status = "failed";
        result.exit_code = 3;
        manifest["error"] = e.what();
    } catch (const Error& e) {
        result.status = "failed";
        result.exit_code = 4;
        manifest["error"] = e.what();
    }

    if (traj.singular) {
        result.singular_time = traj.singular_time;
        manifest["singular_time"] = traj.singular_time;
    } else {
        manifest["singular_time"] = nullptr;
    }
    manifest["grid"]["snapshots"] = traj.times.size();

    // ------------------------------------------------------ trajectory.csv
    if (want_csv && !traj.states.empty()) {
        const bool with_gauge = traj.has_gauge();
        const bool with_p = pair.has_value();
        const int n = traj.states[0].n();
        std::string csv = "t,r,h";
        for (int i = 0; i < n; ++i) csv += ",f" + std::to_string(i + 1);
        if (with_gauge) csv += ",phi";
        if (with_p) csv += ",psi,ptilde,p";
        csv += "\n";
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            const FlowState& s = with_gauge ? traj.recovered[k] : traj.states[k];
            for (int m = 0; m <= s.N; ++m) {
                csv += fmt17(traj.times[k]);
                csv += ',';
                csv += fmt17(s.r(m));
                csv += ',';
                csv += fmt17(s.h[m]);
                for (int i = 0; i < n; ++i) {
                    csv += ',';
                    csv += fmt17(s.f[i][m]);
                }
                if (with_gauge) {
                    csv += ',';
                    csv += fmt17(traj.phi[k][m]);
                }
                if (with_p) {
                    csv += ',';
                    csv += fmt17(pair->psi[k][m]);
                    csv += ',';
                    csv += fmt17(pair->ptilde[k][m]);
                    csv += ',';
                    csv += fmt17(pair->p[k].p[m]);
                }
                csv += '\n';
            }
        }
        write_text_atomic(cfg.out_dir / "trajectory.csv", csv);
        files.push_back("trajectory.csv");
    }

    // --------------------------------------------------------- report.json
    if (want_json && (fres || mono)) {
        ordered_json rep;
        if (fres) {
            rep["flow_residual"] = {{"times", series(fres->times)},
                                    {"linf", series(fres->linf)},
                                    {"max", fres->max}};
            metrics["flow_residual_max"] = fres->max;
        }
        if (mres) {
            rep["mrf_residual"] = {{"times", series(mres->times)},
                                   {"metric", series(mres->metric)},
                                   {"scalar", series(mres->scalar)},
                                   {"max", mres->max}};
            metrics["mrf_residual_max"] = mres->max;
        }
        if (mono) {
            rep["times"] = series(mono->times);
            rep["F_values"] = series(mono->F_values);
            rep["dF_dt_fd"] = series(mono->dF_dt_fd);
            rep["dF_dt_formula"] = series(mono->dF_dt_formula);
            rep["general_formula_rhs"] = series(mono->general_formula_rhs);
            rep["mean_curvature"] =
                ordered_json::array({series(mono->mean_curvature[0]), series(mono->mean_curvature[1])});
            rep["xi"] = ordered_json::array({series(mono->xi[0]), series(mono->xi[1])});
            rep["frak_F"] = ordered_json::array({series(mono->frak_F[0]), series(mono->frak_F[1])});
            rep["max_abs_H"] = mono->max_abs_H;
            rep["max_abs_frak_F"] = mono->max_abs_frak_F;
            rep["residual_max"] = mono->residual_max;
            rep["tol_used"] = mono->tol_used;
            rep["monotone"] = mono->monotone;
            rep["hypothesis_violated"] = mono->hypothesis_violated;
            rep["note"] = mono->note;
            metrics["monotone"] = mono->monotone;
            metrics["max_abs_frak_F"] = mono->max_abs_frak_F;
            metrics["F_first"] = mono->F_values.front();
            metrics["F_last"] = mono->F_values.back();
        }
        write_text_atomic(cfg.out_dir / "report.json", rep.dump(2) + "\n");
        files.push_back("report.json");
    }
    if (!perelman_note.empty()) manifest["perelman"] = perelman_note;

    manifest["status"] = result.status;
    manifest["files"] = files;
    manifest["metrics"] = metrics;
    write_text_atomic(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

// ================================================================ export ====

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void write_series_file(const fs::path& path, const std::string& header,
                       const std::vector<std::vector<double>>& cols) {
    std::string text = "# " + header + "\n";
    const std::size_t rows = cols.empty() ? 0 : cols[0].size();
    for (std::size_t k = 0; k < rows; ++k) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) text += ' ';
            text += fmt17(cols[c][k]);
        }
        text += '\n';
    }
    write_text_atomic(path, text);
}

std::vector<double> json_series(const ordered_json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

}  // namespace

void export_plotdata(const fs::path& run_dir) {
    const fs::path manifest_path = run_dir / "manifest.json";
    const fs::path csv_path = run_dir / "trajectory.csv";
    if (!fs::exists(manifest_path) || !fs::exists(csv_path))
        throw MissingArtifacts("no completed run in '" + run_dir.string() +
                               "' (need manifest.json and trajectory.csv)");

    const fs::path plot = run_dir / "plot";
    fs::create_directories(plot);

    // min over r of every field, per snapshot time, from the trajectory
    {
        std::ifstream in(csv_path);
        std::string line;
        if (!std::getline(in, line)) throw MissingArtifacts("trajectory.csv is empty");
        const auto header = split_csv_line(line);
        std::size_t field_end = header.size();
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == "phi" || header[c] == "psi") {
                field_end = c;
                break;
            }
        std::vector<double> times, minf;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv_line(line);
            const double t = std::stod(cells[0]);
            double m = std::stod(cells[2]);
            for (std::size_t c = 3; c < field_end; ++c) m = std::min(m, std::stod(cells[c]));
            if (times.empty() || t != times.back()) {
                times.push_back(t);
                minf.push_back(m);
            } else {
                minf.back() = std::min(minf.back(), m);
            }
        }
        write_series_file(plot / "min_scale.dat", "t  min over r of h and f_i", {times, minf});
    }

    const fs::path report_path = run_dir / "report.json";
    if (!fs::exists(report_path)) return;  // flow-only run: nothing else to export
    std::ifstream rin(report_path);
    ordered_json rep;
    try {
        rep = ordered_json::parse(rin);
    } catch (const nlohmann::json::parse_error& e) {
        throw MissingArtifacts(std::string("report.json is unreadable: ") + e.what());
    }

    if (rep.contains("F_values")) {
        const auto t = json_series(rep.at("times"));
        write_series_file(plot / "F.dat", "t  F(t)", {t, json_series(rep.at("F_values"))});
        write_series_file(plot / "dF_dt.dat", "t  dF_dt_fd  dF_dt_formula  general_formula_rhs",
                          {t, json_series(rep.at("dF_dt_fd")), json_series(rep.at("dF_dt_formula")),
                           json_series(rep.at("general_formula_rhs"))});
        write_series_file(plot / "boundary.dat", "t  H(0)  H(1)  frak_F(0)  frak_F(1)",
                          {t, json_series(rep.at("mean_curvature").at(0)),
                           json_series(rep.at("mean_curvature").at(1)),
                           json_series(rep.at("frak_F").at(0)),
                           json_series(rep.at("frak_F").at(1))});
    }
    if (rep.contains("flow_residual")) {
        const auto& fr = rep.at("flow_residual");
        write_series_file(plot / "flow_residual.dat", "t  Linf residual",
                          {json_series(fr.at("times")), json_series(fr.at("linf"))});
    }
    if (rep.contains("mrf_residual")) {
        const auto& mr = rep.at("mrf_residual");
        write_series_file(plot / "mrf_residual.dat", "t  metric  scalar",
                          {json_series(mr.at("times")), json_series(mr.at("metric")),
                           json_series(mr.at("scalar"))});
    }
}

}  // namespace symflow
