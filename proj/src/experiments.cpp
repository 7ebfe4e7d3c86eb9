#include "lrdyn/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lrdyn/verify.hpp"

using nlohmann::json;

namespace lrdyn
{

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string Table::csv() const
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
        {
            if (i)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows)
        line(r);
    return out;
}

bool ExperimentResult::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace
{
    std::string num(double x) { return format_number(x); }
    std::string num(int x) { return std::to_string(x); }

    int modes_of(int d, int L, int nspin)
    {
        return static_cast<int>(Box(d, L).size()) * nspin;
    }

    int mode_cap(const ProductSpec& spec, bool force_density)
    {
        return spec.cell_vector && !force_density ? VECTOR_MODE_CAP : DENSITY_MODE_CAP;
    }

    /// Feasible radii in ascending order; infeasible ones become warnings.
    std::vector<int> feasible_sweep(const ExperimentConfig& cfg, int extra_radius, ExperimentResult& r)
    {
        const int d = cfg.model->base.dimension();
        const int nspin = cfg.model->base.nspin();
        int cap = VECTOR_MODE_CAP;
        for (const auto& c : cfg.components)
            cap = std::min(cap, mode_cap(c, cfg.force_density));

        std::vector<int> sorted = cfg.sweep;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<int> out;
        for (int L : sorted)
        {
            if (modes_of(d, L + extra_radius, nspin) <= cap)
                out.push_back(L);
            else
                r.warnings.push_back("L = " + std::to_string(L) + " skipped: more than " + std::to_string(cap) +
                                     " modes");
        }
        if (out.empty())
            throw ConfigError("sweep", "no radius fits the mode budget of " + std::to_string(cap));
        return out;
    }

    void sweep_size_warning(const std::vector<int>& Ls, ExperimentResult& r)
    {
        if (Ls.size() < 3)
            r.warnings.push_back("only " + std::to_string(Ls.size()) +
                                 " sweep points are feasible; a trend over fewer than 3 points is weak evidence");
    }

    int support_radius(const LocalOperator& op)
    {
        int r = 0;
        for (const auto& x : op.support())
            for (int c : x)
                r = std::max(r, std::abs(c));
        return r;
    }

    void require_fits(const LocalOperator& op, int d, int L, const std::string& field)
    {
        if (support_radius(op) > L)
            throw ConfigError(field, "support does not fit in the box of radius " + std::to_string(L) + " (d = " +
                                         std::to_string(d) + ")");
    }

    // ---------------------------------------------------------------- simulate

    void run_simulate(const ExperimentConfig& cfg, ExperimentResult& r, json& res)
    {
        const auto& m = *cfg.model;
        const int d = m.base.dimension();
        const auto Ls = feasible_sweep(cfg, 0, r);
        for (int L : Ls)
        {
            require_fits(cfg.a, d, L, "observables.A");
            require_fits(cfg.b, d, L, "observables.B");
        }

        struct Series
        {
            std::vector<std::vector<std::string>> rows;
            double drift = 0.0;
            int steps = 0;
        };
        std::vector<Series> out(Ls.size());
        parallel_for(Ls.size(), cfg.threads, [&](std::size_t i) {
            const int L = Ls[i];
            const SpacePtr space = make_space(Box(d, L), m.base.nspin());
            const ProductSpec spec = cfg.components.front();
            const LatticeState rho = rebuild(spec, space);
            const SpMat a = instantiate(cfg.a, space).matrix();
            const SpMat b = instantiate(cfg.b, space).matrix();
            const auto h = model_hamiltonian(m, space);
            Series& sr = out[i];
            auto record = [&](int k, double t, cplx v) {
                sr.rows.push_back({num(L), num(k), num(t), num(v.real()), num(v.imag())});
            };
            if (cfg.s == cfg.t)
            {
                const cplx v = rho.is_pure() ? (b * rho.vector()).dot(a * (b * rho.vector()))
                                             : (a * b * rho.density_matrix() * b.adjoint()).trace();
                record(0, cfg.s, v);
                return;
            }
            const TimeGrid grid = cfg.steps > 0 ? make_grid(cfg.s, cfg.t, cfg.steps) : default_grid(h, cfg.s, cfg.t);
            sr.steps = grid.steps;
            if (rho.is_pure())
            {
                const Vec phi0 = b * rho.vector();
                const double n0 = phi0.norm();
                evolve_vector(h, grid, phi0, [&](int k, double t, const Vec& phi) {
                    if (k % cfg.record_every == 0 || k == grid.steps)
                        record(k, t, phi.dot(a * phi));
                    sr.drift = std::max(sr.drift, std::abs(phi.norm() - n0));
                });
            }
            else
            {
                const Mat sigma0 = b * rho.density_matrix() * b.adjoint();
                const cplx tr0 = sigma0.trace();
                evolve_density(h, grid, sigma0, [&](int k, double t, const Mat& sigma) {
                    if (k % cfg.record_every == 0 || k == grid.steps)
                        record(k, t, (a * sigma).trace());
                    sr.drift = std::max(sr.drift, std::abs(sigma.trace() - tr0));
                });
            }
        });

        Table tab{{"L", "step", "t", "re", "im"}, {}};
        double drift = 0.0;
        json per_l = json::array();
        for (std::size_t i = 0; i < Ls.size(); ++i)
        {
            tab.rows.insert(tab.rows.end(), out[i].rows.begin(), out[i].rows.end());
            drift = std::max(drift, out[i].drift);
            per_l.push_back({{"L", Ls[i]}, {"steps", out[i].steps}, {"norm_drift", out[i].drift}});
        }
        r.tables.emplace_back("", std::move(tab));
        r.checks.push_back({"norm_conserved", drift <= 1e-9, "max drift " + num(drift) + " <= 1e-9"});
        res["sizes"] = per_l;
    }

    // ---------------------------------------------------------------- selfconsistent

    Table flow_table(const FlowTrajectory& f, int every)
    {
        Table tab;
        tab.header = {"step", "t"};
        for (const auto& l : f.labels)
        {
            tab.header.push_back(l + ".re");
            tab.header.push_back(l + ".im");
        }
        for (std::size_t k = 0; k < f.nodes(); ++k)
        {
            if (k % static_cast<std::size_t>(every) != 0 && k + 1 != f.nodes())
                continue;
            std::vector<std::string> row{num(static_cast<int>(k)), num(f.times[k])};
            for (const auto& g : f.scalars[k])
            {
                row.push_back(num(g.real()));
                row.push_back(num(g.imag()));
            }
            tab.rows.push_back(std::move(row));
        }
        return tab;
    }

    void run_selfconsistent(const ExperimentConfig& cfg, ExperimentResult& r, json& res)
    {
        const auto& m = *cfg.model;
        const ProductSpec& spec = cfg.components.front();
        const int radius = cfg.box >= 0 ? cfg.box : energy_density_radius(m.base, spec.l);
        const int modes = modes_of(m.base.dimension(), radius, m.base.nspin());
        if (modes > mode_cap(spec, cfg.force_density))
            throw ConfigError("box", "self-consistency box has " + std::to_string(modes) + " modes");
        if (radius < energy_density_radius(m.base, spec.l))
            throw ConfigError("box", "too small for the energy densities of the atoms");
        const SpacePtr space = make_space(Box(m.base.dimension(), radius), m.base.nspin());
        LatticeState rho0 = rebuild(spec, space);
        if (cfg.force_density && rho0.is_pure())
            rho0 = LatticeState::density(space, rho0.density_matrix(), rho0.period());

        const int steps = cfg.s == cfg.t ? 1 : std::max(1, static_cast<int>(std::ceil(std::abs(cfg.t - cfg.s) / cfg.flow_step)));
        const TimeGrid grid = make_grid(cfg.s, cfg.t, steps);
        const FlowTrajectory flow = solve_self_consistency(m, rho0, grid, cfg.solver);
        r.tables.emplace_back("", flow_table(flow, cfg.record_every));

        r.checks.push_back({"picard_converged", flow.converged,
                            "every window reached tol " + num(cfg.solver.tol)});
        r.checks.push_back({"picard_defect", flow.defect <= 1e-8, "final defect " + num(flow.defect) + " <= 1e-8"});
        r.checks.push_back({"picard_iterations", flow.max_window_iterations <= cfg.solver.max_iter,
                            "max per window " + std::to_string(flow.max_window_iterations) +
                                " <= " + std::to_string(cfg.solver.max_iter)});
        double comp = 0.0;
        if (steps >= 2 && cfg.s != cfg.t)
        {
            comp = flow_composition_defect(m, rho0, grid, steps / 2, cfg.solver);
            r.checks.push_back({"flow_composition", comp <= 5.0 * cfg.solver.tol,
                                "restart at the midpoint differs by " + num(comp) + " <= 5 tol"});
        }

        res["box"] = radius;
        res["modes"] = modes;
        res["steps"] = steps;
        res["iterations"] = flow.iterations;
        res["max_window_iterations"] = flow.max_window_iterations;
        res["window_iterations"] = flow.window_iterations;
        res["window_contraction"] = flow.window_contraction;
        res["defect"] = flow.defect;
        res["damping_used"] = flow.damping_used;
        res["composition_defect"] = comp;
        res["labels"] = flow.labels;
    }

    // ---------------------------------------------------------------- lrbound

    void run_lrbound(const ExperimentConfig& cfg, ExperimentResult& r, json& res)
    {
        std::mt19937_64 rng(cfg.seed);
        std::vector<LrDraw> draws;
        draws.reserve(static_cast<std::size_t>(cfg.draws));
        for (int i = 0; i < cfg.draws; ++i)
            draws.push_back(random_lr_draw(rng, cfg.max_modes));

        std::vector<BoundReport> reports(draws.size());
        parallel_for(draws.size(), cfg.threads, [&](std::size_t i) {
            const LrDraw& dr = draws[i];
            const SpacePtr space = make_space(dr.box, dr.model.base.nspin());
            BoundOptions opt;
            opt.constants = dr.constants;
            opt.steps = dr.steps;
            reports[i] = lr_bound_check(dr.model, dr.model.base.phi, instantiate(dr.a, space), dr.box, dr.s, dr.t, opt);
        });

        Table tab{{"draw", "d", "spins", "L", "atoms", "scheduled", "s", "t", "lhs", "log_rhs", "ratio", "pass"}, {}};
        int failures = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < draws.size(); ++i)
        {
            const auto& dr = draws[i];
            const auto& br = reports[i];
            failures += br.pass ? 0 : 1;
            worst = std::max(worst, br.ratio);
            tab.rows.push_back({num(static_cast<int>(i)), num(dr.box.dimension()), num(dr.model.base.nspin()),
                                num(dr.box.radius()), num(static_cast<int>(dr.model.base.atoms.size())),
                                dr.model.autonomous() ? "0" : "1", num(dr.s), num(dr.t), num(br.lhs),
                                num(br.log_rhs), num(br.ratio), br.pass ? "1" : "0"});
        }
        r.tables.emplace_back("", std::move(tab));
        r.checks.push_back({"lr_bound_holds", failures == 0,
                            std::to_string(failures) + " violations in " + std::to_string(draws.size()) + " draws"});
        res["draws"] = cfg.draws;
        res["max_modes"] = cfg.max_modes;
        res["worst_ratio"] = worst;
        res["violations"] = failures;
    }

    // ---------------------------------------------------------------- converge / mixture

    ConvergenceConfig convergence_config(const ExperimentConfig& cfg)
    {
        ConvergenceConfig c;
        c.solver = cfg.solver;
        c.flow_step = cfg.flow_step;
        c.box_eff_radius = cfg.box;
        c.force_density = cfg.force_density;
        c.threads = cfg.threads;
        return c;
    }

    std::vector<std::string> row_cells(const ConvergenceRow& row)
    {
        return {num(row.L),           num(row.modes),         num(row.full.real()), num(row.full.imag()),
                num(row.effective.real()), num(row.effective.imag()), num(row.gap),   num(row.full_steps)};
    }

    const std::vector<std::string> ROW_HEADER{"L",      "modes",  "full_re", "full_im",
                                              "eff_re", "eff_im", "gap",     "full_steps"};

    json rows_json(const std::vector<ConvergenceRow>& rows)
    {
        json out = json::array();
        for (const auto& row : rows)
            out.push_back({{"L", row.L}, {"gap", row.gap}, {"full_steps", row.full_steps}, {"seconds", row.seconds}});
        return out;
    }

    void add_trend_checks(const std::string& prefix, const std::vector<ConvergenceRow>& rows, bool short_range,
                          ExperimentResult& r)
    {
        if (short_range)
        {
            double worst = 0.0;
            for (const auto& row : rows)
                worst = std::max(worst, row.gap);
            r.checks.push_back({prefix + "short_range_coincide", worst <= 2.0 * UNITARITY_TOL,
                                "max gap " + num(worst) + " <= " + num(2.0 * UNITARITY_TOL)});
            return;
        }
        if (rows.size() < 2)
        {
            r.checks.push_back({prefix + "trend", false, "needs at least two feasible sizes"});
            return;
        }
        const bool trend = rows.back().gap < rows.front().gap;
        bool strict = true;
        for (std::size_t i = 1; i < rows.size(); ++i)
            strict = strict && rows[i].gap < rows[i - 1].gap;
        r.checks.push_back({prefix + "trend", trend,
                            "gap(L=" + num(rows.back().L) + ") = " + num(rows.back().gap) + " < gap(L=" +
                                num(rows.front().L) + ") = " + num(rows.front().gap)});
        r.checks.push_back({prefix + "strictly_decreasing", strict, "gaps strictly decrease along the sweep"});
    }

    void check_observables(const ExperimentConfig& cfg, const std::vector<int>& Ls)
    {
        const int d = cfg.model->base.dimension();
        for (int L : Ls)
        {
            require_fits(cfg.a, d, L, "observables.A");
            require_fits(cfg.b, d, L, "observables.B");
        }
    }

    void run_converge(const ExperimentConfig& cfg, ExperimentResult& r, json& res)
    {
        const auto Ls = feasible_sweep(cfg, 0, r);
        sweep_size_warning(Ls, r);
        check_observables(cfg, Ls);
        const auto& m = *cfg.model;
        const ConvergenceReport rep =
            main_convergence(m, cfg.components.front(), cfg.a, cfg.b, cfg.s, cfg.t, Ls, convergence_config(cfg));

        Table tab{ROW_HEADER, {}};
        for (const auto& row : rep.rows)
            tab.rows.push_back(row_cells(row));
        r.tables.emplace_back("", std::move(tab));
        add_trend_checks("", rep.rows, m.base.short_range_only(), r);
        r.checks.push_back({"flow_converged", rep.flow_converged, "flow defect " + num(rep.flow_defect)});

        res["model"] = rep.model;
        res["state"] = rep.state;
        res["box_eff"] = rep.box_eff_radius;
        res["flow_iterations"] = rep.flow_iterations;
        res["flow_defect"] = rep.flow_defect;
        res["rows"] = rows_json(rep.rows);
        res["note"] = "finite sweeps certify monotone trends only; no limit value is asserted";
    }

    void run_mixture(const ExperimentConfig& cfg, ExperimentResult& r, json& res)
    {
        const auto Ls = feasible_sweep(cfg, 0, r);
        sweep_size_warning(Ls, r);
        check_observables(cfg, Ls);
        const auto& m = *cfg.model;
        const MixtureReport rep = mixture_convergence(cfg.weights, cfg.components, m, cfg.a, cfg.b, cfg.s, cfg.t,
                                                      Ls, convergence_config(cfg));

        Table tab;
        tab.header = {"fiber"};
        tab.header.insert(tab.header.end(), ROW_HEADER.begin(), ROW_HEADER.end());
        json fibers = json::array();
        bool converged = true;
        for (std::size_t i = 0; i < rep.fibers.size(); ++i)
        {
            for (const auto& row : rep.fibers[i].rows)
            {
                auto cells = row_cells(row);
                cells.insert(cells.begin(), num(static_cast<int>(i)));
                tab.rows.push_back(std::move(cells));
            }
            converged = converged && rep.fibers[i].flow_converged;
            fibers.push_back({{"weight", rep.weights[i]},
                              {"state", rep.fibers[i].state},
                              {"flow_defect", rep.fibers[i].flow_defect},
                              {"rows", rows_json(rep.fibers[i].rows)}});
        }
        for (const auto& row : rep.mixed)
        {
            auto cells = row_cells(row);
            cells.insert(cells.begin(), "mixed");
            tab.rows.push_back(std::move(cells));
        }
        r.tables.emplace_back("", std::move(tab));

        if (m.base.short_range_only())
            add_trend_checks("mixed_", rep.mixed, true, r);
        else if (rep.mixed.size() >= 2)
            r.checks.push_back({"mixed_trend", rep.trend(),
                                "mixed gap(L=" + num(rep.mixed.back().L) + ") = " + num(rep.mixed.back().gap) +
                                    " < gap(L=" + num(rep.mixed.front().L) + ") = " + num(rep.mixed.front().gap)});
        else
            r.checks.push_back({"mixed_trend", false, "needs at least two feasible sizes"});
        r.checks.push_back({"flows_converged", converged, "every fiber's flow reached tolerance"});
        res["fibers"] = fibers;
        res["mixed"] = rows_json(rep.mixed);
    }

    // ---------------------------------------------------------------- density

    void run_density(const ExperimentConfig& cfg, ExperimentResult& r, json& res)
    {
        const auto& m = *cfg.model;
        if (!m.base.atoms.empty())
            r.warnings.push_back("density experiment uses the short-range part only; atoms are ignored");
        const ProductSpec& spec = cfg.components.front();
        const int ext = support_radius(cfg.a);
        const auto Ls = feasible_sweep(cfg, ext, r);
        sweep_size_warning(Ls, r);
        const int d = m.base.dimension();
        for (int L : Ls)
            require_fits(cfg.b, d, L, "observables.B");

        const auto rows = energy_density_convergence(m.base.phi, spec, cfg.b, Ls, cfg.threads);
        std::vector<double> defects(Ls.size());
        parallel_for(Ls.size(), cfg.threads, [&](std::size_t i) {
            const SpacePtr space = make_space(Box(d, Ls[i] + ext), m.base.nspin());
            const LatticeState rho = rebuild(spec, space);
            defects[i] = ergodicity_defect(rho, instantiate(cfg.a, space), Ls[i], spec.l);
        });

        Table tab{{"L", "value_re", "value_im", "reference_re", "reference_im", "gap", "ergodicity_defect"}, {}};
        bool gaps_monotone = true, defects_monotone = true;
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            const auto& row = rows[i];
            tab.rows.push_back({num(row.L), num(row.value.real()), num(row.value.imag()), num(row.reference.real()),
                                num(row.reference.imag()), num(row.gap), num(defects[i])});
            if (i > 0)
            {
                gaps_monotone = gaps_monotone && row.gap <= rows[i - 1].gap + 1e-12;
                defects_monotone = defects_monotone && defects[i] <= defects[i - 1] + 1e-12;
            }
        }
        r.tables.emplace_back("", std::move(tab));
        r.checks.push_back({"density_gaps_monotone", gaps_monotone, "energy density gaps do not increase with L"});
        r.checks.push_back({"ergodicity_defect_monotone", defects_monotone,
                            "ergodicity defects do not increase with L"});
        res["period"] = spec.l.l;
    }

    std::string timestamp()
    {
        const std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::ostringstream os;
        os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        return os.str();
    }
} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult r;
    r.name = cfg.name;
    r.kind = to_string(cfg.kind);
    json res = json::object();
    try
    {
        switch (cfg.kind)
        {
        case ExperimentKind::simulate:
            run_simulate(cfg, r, res);
            break;
        case ExperimentKind::selfconsistent:
            run_selfconsistent(cfg, r, res);
            break;
        case ExperimentKind::lrbound:
            run_lrbound(cfg, r, res);
            break;
        case ExperimentKind::converge:
            run_converge(cfg, r, res);
            break;
        case ExperimentKind::mixture:
            run_mixture(cfg, r, res);
            break;
        case ExperimentKind::density:
            run_density(cfg, r, res);
            break;
        }
    }
    catch (const ResourceLimit& e)
    {
        throw ConfigError(cfg.kind == ExperimentKind::lrbound ? "lrbound.max_modes" : "sweep", e.what());
    }
    catch (const GeometryError& e)
    {
        throw ConfigError("observables", e.what());
    }
    r.results_json = res.dump();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<std::filesystem::path> write_outputs(const ExperimentResult& r, const ExperimentConfig& cfg,
                                                 const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ConfigError("--out", "cannot create '" + dir.string() + "': " + ec.message());

    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& body) {
        std::ofstream out(p, std::ios::binary);
        if (!out || !(out << body))
            throw ConfigError("--out", "cannot write '" + p.string() + "'");
        written.push_back(p);
    };

    json files = json::array();
    for (const auto& [suffix, table] : r.tables)
    {
        const auto p = dir / (cfg.prefix + (suffix.empty() ? "" : "-" + suffix) + ".csv");
        put(p, table.csv());
        files.push_back(p.filename().string());
    }

    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    json summary = {{"schema_version", SUMMARY_SCHEMA_VERSION},
                    {"name", r.name},
                    {"experiment", r.kind},
                    {"seed", cfg.seed},
                    {"all_pass", r.all_pass()},
                    {"checks", checks},
                    {"warnings", r.warnings},
                    {"csv", files},
                    {"results", json::parse(r.results_json)},
                    {"config", json::parse(cfg.source)},
                    {"metadata", {{"created", timestamp()}, {"seconds", r.seconds}, {"threads", cfg.threads}}}};
    put(dir / (cfg.prefix + ".json"), summary.dump(2) + "\n");
    return written;
}

} // namespace lrdyn
