// Command-line front end: validate, estimate, simulate-study, dgm, truth, oracle.

#include "scgcomp/alternatives.hpp"
#include "scgcomp/dgm.hpp"
#include "scgcomp/discrete_world.hpp"
#include "scgcomp/errors.hpp"
#include "scgcomp/gcomp_ice.hpp"
#include "scgcomp/gcomp_standard.hpp"
#include "scgcomp/inference.hpp"
#include "scgcomp/panel_io.hpp"
#include "scgcomp/parallel.hpp"
#include "scgcomp/report.hpp"
#include "scgcomp/rng.hpp"
#include "scgcomp/spec_io.hpp"
#include "scgcomp/study.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

using namespace scgcomp;

namespace {

enum ExitCode
{
    kOk = 0,
    kUsage = 1,
    kValidation = 2,
    kNumerical = 3,
};

/// Writes to a file, or to stdout for "" and "-".
class Output
{
  public:
    explicit Output(const std::string& path)
    {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_)
                throw UsageError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

  private:
    std::ofstream file_;
};

void check_format(const std::string& format)
{
    if (format != "json" && format != "csv")
        throw UsageError("format must be json or csv");
}

PanelDataset load_validated(const std::string& data_path, const std::string& schema_path)
{
    const PanelSchema schema = read_schema(schema_path);
    PanelDataset data = read_panel_csv(std::filesystem::path(data_path), schema);
    const auto report = validate_panel(data);
    if (!report.empty()) {
        const auto& v = report.front();
        throw ValidationError(std::to_string(report.size()) + " violation(s); first: individual '" + v.id
                              + "' interval " + std::to_string(v.interval) + ": " + v.rule);
    }
    return data;
}

json violations_json(const ValidationReport& report)
{
    json arr = json::array();
    for (const auto& v : report)
        arr.push_back(json{{"id", v.id}, {"interval", v.interval}, {"rule", v.rule}});
    return arr;
}

DgmConfig dgm_config(double eta_ref, int eta3_lag, bool no_censoring)
{
    DgmConfig c;
    c.reference_eta = eta_ref;
    c.eta3_k3_action_lag = eta3_lag;
    c.censoring = !no_censoring;
    c.check();
    return c;
}

json dgm_config_json(const DgmConfig& c)
{
    return json{{"reference_eta", c.reference_eta}, {"eta3_k3_action_lag", c.eta3_k3_action_lag},
                {"censoring", c.censoring}};
}

struct ValidateArgs
{
    std::string data, schema, out;
};

int cmd_validate(const ValidateArgs& a)
{
    const PanelSchema schema = read_schema(a.schema);
    const PanelDataset data = read_panel_csv(std::filesystem::path(a.data), schema);
    const auto report = validate_panel(data);
    Output out(a.out);
    json j{{"config", {{"command", "validate"}, {"data", a.data}, {"schema", a.schema}}},
           {"n", data.n()},
           {"violations", violations_json(report)},
           {"valid", report.empty()}};
    out.stream() << j.dump(2) << '\n';
    return report.empty() ? kOk : kValidation;
}

struct EstimateArgs
{
    std::string data, schema, method = "ice", plan_a, plan_b, spec, out, format = "json", trajectory;
    int horizon = 0;
    int boot = 500;
    std::uint64_t seed = 1;
    double level = 0.95;
    std::int64_t mc_b = 100000;
    double ridge = 0.0;
    int threads = 0;
};

int cmd_estimate(const EstimateArgs& a)
{
    check_format(a.format);
    if (a.boot < 0 || a.boot == 1)
        throw UsageError("--boot must be 0 or at least 2");
    const ActionPlan plan_a = ActionPlan::parse(a.plan_a);
    const ActionPlan plan_b = ActionPlan::parse(a.plan_b);
    const std::vector<std::string> methods{"ice", "standard", "alt1", "alt2"};
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end())
        throw UsageError("unknown method '" + a.method + "'");
    if (a.method == "standard" && (plan_a.is_natural() || plan_b.is_natural()))
        throw UsageError("natural course is unsupported for standard g-computation");
    if (a.method == "alt1" && (plan_a.is_natural() || plan_b.is_natural()))
        throw UsageError("the baseline-action estimator needs deterministic plans");

    const PanelSchema schema = read_schema(a.schema);
    const int horizon = a.horizon > 0 ? a.horizon : schema.tau;
    check_plan_horizon(plan_a, horizon, schema.tau);
    check_plan_horizon(plan_b, horizon, schema.tau);
    const SpecFile spec_file = a.spec.empty() ? SpecFile{} : read_spec_file(a.spec);
    const PanelDataset data = load_validated(a.data, a.schema);
    const auto& cols = data.columns();

    FitOptions fit;
    fit.ridge = a.ridge;
    fit.check();
    MonteCarloConfig mc;
    mc.B = a.mc_b;
    mc.seed = derive_seed(a.seed, {0x4D43ull});
    mc.threads = resolve_threads(a.threads > 0 ? std::optional(a.threads) : std::nullopt);
    mc.check();

    std::function<PsiResult(const PanelDataset&, int)> estimate;
    if (a.method == "ice") {
        const IceSpecs specs = ice_specs_from(spec_file, cols);
        estimate = [=](const PanelDataset& d, int h) { return ice_psi(d, plan_a, plan_b, h, specs, fit); };
    } else if (a.method == "alt2") {
        const IceSpecs specs = ice_specs_from(spec_file, cols);
        estimate = [=](const PanelDataset& d, int h) {
            return alt2_censor_terminal_psi(d, plan_a, plan_b, h, specs, fit);
        };
    } else if (a.method == "alt1") {
        const IceSpecs specs = spec_file.outcome ? ice_specs_from(spec_file, cols) : alt1_default_specs();
        estimate = [=](const PanelDataset& d, int h) {
            return alt1_baseline_psi(d, plan_a.values()[0], plan_b.values()[0], h, specs, fit);
        };
    } else {
        const StandardSpecs specs = standard_specs_from(spec_file, cols);
        MonteCarloConfig inner = mc;
        estimate = [=](const PanelDataset& d, int h) {
            return standard_psi(d, plan_a, plan_b, h, specs, inner, fit);
        };
    }

    const int threads = resolve_threads(a.threads > 0 ? std::optional(a.threads) : std::nullopt);
    auto with_inference = [&](int h) {
        PsiResult r = estimate(data, h);
        if (a.boot >= 2) {
            BootstrapConfig bc;
            bc.R = a.boot;
            bc.seed = a.seed;
            bc.level = a.level;
            bc.threads = threads;
            const auto b = bootstrap(
                data, [&](const PanelDataset& d) { return psi_quantities(estimate(d, h)); }, bc, psi_quantities(r));
            attach_bootstrap(r, b);
        }
        return r;
    };

    json config{{"command", "estimate"}, {"data", a.data},     {"schema", a.schema},
                {"method", a.method},    {"plan_a", plan_a.to_string()},
                {"plan_b", plan_b.to_string()},
                {"horizon", horizon},    {"spec", a.spec.empty() ? json(nullptr) : json::parse(spec_file_json(spec_file))},
                {"boot", a.boot},        {"seed", a.seed},     {"level", a.level},
                {"mc_b", a.mc_b},        {"ridge", a.ridge}};

    const PsiResult result = with_inference(horizon);
    {
        Output out(a.out);
        if (a.format == "json") {
            json j{{"config", config}, {"result", to_json(result)}};
            out.stream() << j.dump(2) << '\n';
        } else {
            write_psi_csv(out.stream(), result, config);
        }
    }
    if (!a.trajectory.empty()) {
        std::vector<PsiResult> traj;
        for (int h = 1; h <= horizon; ++h)
            traj.push_back(h == horizon ? result : with_inference(h));
        Output out(a.trajectory);
        write_trajectory_csv(out.stream(), traj, config);
    }
    return kOk;
}

struct StudyArgs
{
    std::vector<long> n{500, 2000};
    int iters = 2000;
    int boot = 500;
    std::uint64_t seed = 20240501;
    std::string estimators = "standard,ice,alt1,alt2";
    std::int64_t mc_b = 100000;
    std::string plan_a = "1,1,1", plan_b = "0,0,0";
    double eta_ref = 0.0;
    int eta3_lag = 2;
    double ridge = 1e-3;
    double level = 0.95;
    std::string out, format = "csv", records;
    int threads = 0;
    bool progress = false;
};

int cmd_simulate_study(const StudyArgs& a)
{
    check_format(a.format);
    StudyConfig cfg;
    cfg.sample_sizes.assign(a.n.begin(), a.n.end());
    cfg.iterations = a.iters;
    cfg.boot = a.boot;
    cfg.seed = a.seed;
    cfg.level = a.level;
    cfg.estimators.clear();
    std::stringstream ss(a.estimators);
    for (std::string e; std::getline(ss, e, ',');)
        cfg.estimators.push_back(e);
    cfg.plan_a = ActionPlan::parse(a.plan_a);
    cfg.plan_b = ActionPlan::parse(a.plan_b);
    cfg.dgm = dgm_config(a.eta_ref, a.eta3_lag, false);
    cfg.fit.ridge = a.ridge;
    cfg.mc_b = a.mc_b;
    cfg.threads = resolve_threads(a.threads > 0 ? std::optional(a.threads) : std::nullopt);
    cfg.check();

    std::mutex mu;
    StudyProgress progress;
    if (a.progress) {
        progress = [&mu](Eigen::Index n, int it) {
            std::lock_guard lock(mu);
            std::cerr << "n=" << n << " iteration " << it << " done\n";
        };
    }
    const StudyResult res = run_study(cfg, progress);
    json config{{"command", "simulate-study"},
                {"n", a.n},
                {"iters", a.iters},
                {"boot", a.boot},
                {"seed", a.seed},
                {"estimators", cfg.estimators},
                {"mc_b", a.mc_b},
                {"plan_a", cfg.plan_a.to_string()},
                {"plan_b", cfg.plan_b.to_string()},
                {"dgm", dgm_config_json(cfg.dgm)},
                {"ridge", a.ridge},
                {"level", a.level},
                {"truth_psi2", res.truth2},
                {"truth_psi3", res.truth3}};
    {
        Output out(a.out);
        if (a.format == "csv") {
            write_metrics_csv(out.stream(), res.metrics, config);
        } else {
            json rows = json::array();
            for (const auto& m : res.metrics)
                rows.push_back(to_json(m));
            out.stream() << json{{"config", config}, {"metrics", rows}}.dump(2) << '\n';
        }
    }
    if (!a.records.empty()) {
        Output out(a.records);
        write_config_header(out.stream(), config);
        out.stream() << "n,iteration,estimator,ok,psi2,se2,lo2,hi2,psi3,se3,lo3,hi3,discarded\n";
        for (const auto& r : res.records) {
            out.stream() << r.n << ',' << r.iteration << ',' << r.estimator << ',' << (r.ok ? 1 : 0) << ',';
            if (r.ok) {
                out.stream() << format_double(r.psi2) << ',' << format_double(r.se2) << ','
                             << format_double(r.ci2.lower) << ',' << format_double(r.ci2.upper) << ',';
                if (r.has_terminal)
                    out.stream() << format_double(r.psi3) << ',' << format_double(r.se3) << ','
                                 << format_double(r.ci3.lower) << ',' << format_double(r.ci3.upper);
                else
                    out.stream() << ",,,";
            } else {
                out.stream() << ",,,,,,,";
            }
            out.stream() << ',' << r.discarded << '\n';
        }
    }
    return kOk;
}

struct DgmArgs
{
    long n = 500;
    std::uint64_t seed = 1;
    std::string out, schema_out;
    double eta_ref = 0.0;
    int eta3_lag = 2;
    bool no_censoring = false;
};

int cmd_dgm(const DgmArgs& a)
{
    const DgmConfig cfg = dgm_config(a.eta_ref, a.eta3_lag, a.no_censoring);
    const PanelDataset data = dgm_sample(a.n, a.seed, cfg);
    json config{{"command", "dgm"}, {"n", a.n}, {"seed", a.seed}, {"dgm", dgm_config_json(cfg)}};
    {
        Output out(a.out);
        write_config_header(out.stream(), config);
        write_panel_csv(out.stream(), data);
    }
    if (!a.schema_out.empty()) {
        Output out(a.schema_out);
        out.stream() << schema_json(schema_of(data)) << '\n';
    }
    return kOk;
}

struct TruthArgs
{
    std::string plan, out;
    std::int64_t N = 10000000;
    std::uint64_t seed = 1;
    int horizon = 3;
    bool exact = false;
    double eta_ref = 0.0;
    int eta3_lag = 2;
    int threads = 0;
};

int cmd_truth(const TruthArgs& a)
{
    const ActionPlan plan = ActionPlan::parse(a.plan);
    if (plan.is_natural())
        throw UsageError("truth requires a deterministic plan");
    const DgmConfig cfg = dgm_config(a.eta_ref, a.eta3_lag, false);
    const int threads = resolve_threads(a.threads > 0 ? std::optional(a.threads) : std::nullopt);
    const StateDistribution p = a.exact ? dgm_exact_truth(plan, cfg, a.horizon)
                                        : dgm_truth(plan, a.N, a.seed, cfg, threads, a.horizon);
    json config{{"command", "truth"}, {"plan", plan.to_string()}, {"horizon", a.horizon},
                {"method", a.exact ? "enumeration" : "monte-carlo"}, {"dgm", dgm_config_json(cfg)}};
    if (!a.exact) {
        config["N"] = a.N;
        config["seed"] = a.seed;
    }
    json j{{"version", 1}, {"config", config}, {"proportions", {p(0), p(1), p(2)}}};
    Output out(a.out);
    out.stream() << j.dump(2) << '\n';
    return kOk;
}

struct OracleArgs
{
    int worlds = 200;
    std::vector<int> tau{1, 2, 3};
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_oracle(const OracleArgs& a)
{
    if (a.worlds < 1)
        throw UsageError("--worlds must be at least 1");
    double max_gap = 0.0;
    long checks = 0;
    for (int w = 0; w < a.worlds; ++w) {
        const int tau = a.tau[static_cast<std::size_t>(w) % a.tau.size()];
        WorldOptions opt;
        opt.sticky = (w % 3 == 0) ? 0.5 : 0.0;
        const DiscreteWorld world = random_world(tau, derive_seed(a.seed, {static_cast<std::uint64_t>(w)}), opt);
        const ObservedLaw law = observed_law(world);
        std::vector<ActionPlan> plans{ActionPlan::natural_course()};
        for (int bits = 0; bits < (1 << tau); ++bits) {
            std::vector<int> v;
            for (int t = 0; t < tau; ++t)
                v.push_back((bits >> t) & 1);
            plans.push_back(ActionPlan::deterministic(v));
        }
        for (int h = 1; h <= tau; ++h) {
            for (const auto& plan : plans) {
                const StateDistribution gap =
                    nested_formula_truth(law, plan, h) - enumerate_truth(world, plan, h);
                max_gap = std::max(max_gap, gap.cwiseAbs().maxCoeff());
                ++checks;
            }
        }
    }
    json config{{"command", "oracle"}, {"worlds", a.worlds}, {"tau", a.tau}, {"seed", a.seed}};
    json j{{"config", config}, {"checks", checks}, {"max_discrepancy", max_gap}, {"passed", max_gap < 1e-10}};
    Output out(a.out);
    out.stream() << j.dump(2) << '\n';
    return kOk;
}

int fail(const char* kind, const std::string& message, int code)
{
    std::cerr << json{{"error", {{"type", kind}, {"message", message}}}, {"exit_code", code}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multistate g-computation for semi-competing events"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "scgcomp 1.0.0");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Check a panel file against the structural rules");
    validate->add_option("--data", va.data, "Panel CSV")->required();
    validate->add_option("--schema", va.schema, "Schema JSON")->required();
    validate->add_option("--out", va.out, "Report path (stdout by default)");

    EstimateArgs ea;
    auto* estimate = app.add_subcommand("estimate", "Estimate the contrast between two plans");
    estimate->add_option("--data", ea.data, "Panel CSV")->required();
    estimate->add_option("--schema", ea.schema, "Schema JSON")->required();
    estimate->add_option("--method", ea.method, "ice, standard, alt1 or alt2")->capture_default_str();
    estimate->add_option("--plan-a", ea.plan_a, "Comma-separated actions or 'natural'")->required();
    estimate->add_option("--plan-b", ea.plan_b, "Comma-separated actions or 'natural'")->required();
    estimate->add_option("--horizon", ea.horizon, "Horizon (defaults to the last interval)");
    estimate->add_option("--spec", ea.spec, "Model specification JSON");
    estimate->add_option("--boot", ea.boot, "Bootstrap replicates (0 disables)")->capture_default_str();
    estimate->add_option("--seed", ea.seed, "Seed")->capture_default_str();
    estimate->add_option("--level", ea.level, "Confidence level")->capture_default_str();
    estimate->add_option("--out", ea.out, "Result path (stdout by default)");
    estimate->add_option("--format", ea.format, "json or csv")->capture_default_str();
    estimate->add_option("--trajectory", ea.trajectory, "Per-horizon trajectory CSV path");
    estimate->add_option("--mc-b", ea.mc_b, "Monte Carlo size for standard g-computation")->capture_default_str();
    estimate->add_option("--ridge", ea.ridge, "L2 penalty of every model fit")->capture_default_str();
    estimate->add_option("--threads", ea.threads, "Worker threads (SCGCOMP_THREADS by default)");

    StudyArgs sa;
    auto* study = app.add_subcommand("simulate-study", "Repeated sampling study on the built-in mechanism");
    study->add_option("--n", sa.n, "Sample sizes")->capture_default_str();
    study->add_option("--iters", sa.iters, "Iterations per sample size")->capture_default_str();
    study->add_option("--boot", sa.boot, "Bootstrap replicates")->capture_default_str();
    study->add_option("--seed", sa.seed, "Seed")->capture_default_str();
    study->add_option("--estimators", sa.estimators, "Comma-separated estimator names")->capture_default_str();
    study->add_option("--mc-b", sa.mc_b, "Monte Carlo size for standard g-computation")->capture_default_str();
    study->add_option("--plan-a", sa.plan_a, "First plan")->capture_default_str();
    study->add_option("--plan-b", sa.plan_b, "Second plan")->capture_default_str();
    study->add_option("--eta-ref", sa.eta_ref, "Reference outcome predictor")->capture_default_str();
    study->add_option("--eta3-lag", sa.eta3_lag, "Terminal predictor at interval 3 reads A_{3-lag}")
        ->capture_default_str();
    study->add_option("--ridge", sa.ridge, "L2 penalty of every model fit")->capture_default_str();
    study->add_option("--level", sa.level, "Confidence level")->capture_default_str();
    study->add_option("--out", sa.out, "Metrics path (stdout by default)");
    study->add_option("--format", sa.format, "csv or json")->capture_default_str();
    study->add_option("--records", sa.records, "Per-iteration CSV path");
    study->add_option("--threads", sa.threads, "Worker threads (SCGCOMP_THREADS by default)");
    study->add_flag("--progress", sa.progress, "Report finished iterations on stderr");

    DgmArgs da;
    auto* dgm = app.add_subcommand("dgm", "Sample a panel from the built-in mechanism");
    dgm->add_option("--n", da.n, "Sample size")->capture_default_str();
    dgm->add_option("--seed", da.seed, "Seed")->capture_default_str();
    dgm->add_option("--out", da.out, "Panel CSV path (stdout by default)");
    dgm->add_option("--schema-out", da.schema_out, "Schema JSON path");
    dgm->add_option("--eta-ref", da.eta_ref, "Reference outcome predictor")->capture_default_str();
    dgm->add_option("--eta3-lag", da.eta3_lag, "Terminal predictor at interval 3 reads A_{3-lag}")
        ->capture_default_str();
    dgm->add_flag("--no-censoring", da.no_censoring, "Switch censoring off");

    TruthArgs ta;
    auto* truth = app.add_subcommand("truth", "State proportions of the mechanism under a plan");
    truth->add_option("--plan", ta.plan, "Comma-separated actions")->required();
    truth->add_option("--N", ta.N, "Monte Carlo size")->capture_default_str();
    truth->add_option("--seed", ta.seed, "Seed")->capture_default_str();
    truth->add_option("--horizon", ta.horizon, "Horizon")->capture_default_str();
    truth->add_flag("--exact", ta.exact, "Exact enumeration instead of Monte Carlo");
    truth->add_option("--eta-ref", ta.eta_ref, "Reference outcome predictor")->capture_default_str();
    truth->add_option("--eta3-lag", ta.eta3_lag, "Terminal predictor at interval 3 reads A_{3-lag}")
        ->capture_default_str();
    truth->add_option("--out", ta.out, "Output path (stdout by default)");
    truth->add_option("--threads", ta.threads, "Worker threads (SCGCOMP_THREADS by default)");

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "Compare nested expectations with enumeration on random worlds");
    oracle->add_option("--worlds", oa.worlds, "Number of worlds")->capture_default_str();
    oracle->add_option("--tau", oa.tau, "Interval counts cycled over the worlds")->capture_default_str();
    oracle->add_option("--seed", oa.seed, "Seed")->capture_default_str();
    oracle->add_option("--out", oa.out, "Output path (stdout by default)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), kUsage);
    }

    try {
        if (validate->parsed())
            return cmd_validate(va);
        if (estimate->parsed())
            return cmd_estimate(ea);
        if (study->parsed())
            return cmd_simulate_study(sa);
        if (dgm->parsed())
            return cmd_dgm(da);
        if (truth->parsed())
            return cmd_truth(ta);
        if (oracle->parsed())
            return cmd_oracle(oa);
    } catch (const UsageError& e) {
        return fail("usage", e.what(), kUsage);
    } catch (const ValidationError& e) {
        return fail("validation", e.what(), kValidation);
    } catch (const PositivityError& e) {
        return fail("positivity", e.what(), kNumerical);
    } catch (const Error& e) {
        return fail("numerical", e.what(), kNumerical);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kNumerical);
    }
    return kUsage;
}
