/*
   Copyright 2026 The polyqmc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Command-line front end: construct generating vectors, emit point sets,
// evaluate one estimate from a plan file, run convergence sweeps, and fit
// slopes from sweep CSVs. Exit codes: 0 success, 2 configuration error,
// 3 parameters outside the supported regime.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <polyqmc/harness.hpp>

namespace {

using namespace polyqmc;

ProductIntegrand::Shape parse_shape(const std::string& name) {
    if (name == "linear") return ProductIntegrand::Shape::linear;
    if (name == "quadratic") return ProductIntegrand::Shape::quadratic;
    throw std::invalid_argument("shape must be linear or quadratic");
}

ScrambleSpec::Kind parse_kind(const std::string& name) {
    if (name == "owen") return ScrambleSpec::Kind::owen;
    if (name == "linear-shift") return ScrambleSpec::Kind::linear_shift;
    throw std::invalid_argument("scramble must be owen or linear-shift");
}

std::vector<std::uint64_t> parse_budget_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) throw std::invalid_argument("budget list has an empty entry");
        std::size_t used = 0;
        const unsigned long long v = std::stoull(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("bad budget: " + tok);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("budget list is empty");
    return out;
}

struct ConstructArgs {
    int m = 6;
    int s = 16;
    double alpha = 3.0;
    std::string search = "full";
    std::uint64_t candidates = 512;
    std::uint64_t seed = 0;
    std::string out = "vector.txt";
};

int run_construct(const ConstructArgs& a) {
    const WeightSequence ws = WeightSequence::power_law(a.alpha, 1.0);
    const SearchSpec spec = a.search == "full" ? SearchSpec::full()
                                               : SearchSpec::random(a.candidates, a.seed);
    const CbcResult res = cbc_construct(a.m, a.s, ws, spec);
    res.vector.save(a.out);
    res.merit.save(a.out + ".merit.csv");
    std::printf("wrote %s (m=%d s=%d) and %s.merit.csv\n", a.out.c_str(), a.m, a.s,
                a.out.c_str());
    return 0;
}

struct PointsArgs {
    std::string in = "vector.txt";
    int dims = 0;  // 0: all components in the file
    std::string scramble = "none";
    int depth = 31;
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;
    std::string out = "points.csv";
};

int run_points(const PointsArgs& a) {
    const GeneratingVector g = GeneratingVector::load(a.in);
    const int s = a.dims > 0 ? a.dims : g.max_dim();
    const PointSet ps = generate_points(g, s);
    if (a.scramble == "none") {
        save_points(ps, a.out);
    } else {
        ScrambleSpec spec;
        spec.kind = parse_kind(a.scramble);
        spec.depth = a.depth;
        spec.seed = a.seed;
        spec.replicate_id = a.replicate;
        save_points(ScrambledPointSet(ps, spec), a.out);
    }
    std::printf("wrote %s (%llu points, %d dims)\n", a.out.c_str(),
                static_cast<unsigned long long>(ps.n()), s);
    return 0;
}

struct IntegrateArgs {
    std::string plan = "plan.txt";
    std::string shape = "linear";
    std::string scramble = "owen";
    int depth = 31;
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;
    int cbc_max_m = 12;
    double cbc_ops_budget = 2e10;
    std::uint64_t candidates = 512;
};

int run_integrate(const IntegrateArgs& a) {
    std::string first;
    {
        std::ifstream in(a.plan);
        if (!in) throw std::runtime_error("cannot read plan file: " + a.plan);
        std::getline(in, first);
    }
    HarnessConfig cfg;
    cfg.seed = a.seed;
    cfg.scramble = parse_kind(a.scramble);
    cfg.depth = a.depth;
    cfg.cbc_max_m = a.cbc_max_m;
    cfg.cbc_ops_budget = a.cbc_ops_budget;
    cfg.candidates = a.candidates;

    ScrambleSpec spec;
    spec.kind = cfg.scramble;
    spec.depth = cfg.depth;
    spec.seed = cfg.seed;
    spec.replicate_id = a.replicate;

    VectorCache cache;
    double estimate = 0.0;
    if (first == "type=fixed") {
        const FixedPlan plan = FixedPlan::load(a.plan);
        const ProductIntegrand f(WeightSequence::power_law(plan.alpha, 1.0),
                                 parse_shape(a.shape));
        const GeneratingVector& g = cache.get(plan.m(), plan.s, plan.alpha, cfg);
        estimate = fixed_estimate(f, plan, g, spec);
    } else if (first == "type=ml") {
        const MultilevelPlan plan = MultilevelPlan::load(a.plan);
        const ProductIntegrand f(WeightSequence::power_law(plan.alpha, 1.0),
                                 parse_shape(a.shape));
        std::vector<GeneratingVector> gs;
        gs.reserve(plan.n.size());
        for (std::size_t l = 0; l < plan.n.size(); ++l) {
            const int ml = std::bit_width(plan.n[l]) - 1;
            gs.push_back(cache.get(ml, plan.s[l], plan.alpha, cfg));
        }
        estimate = ml_estimate(f, plan, gs, spec);
    } else {
        throw std::runtime_error("plan file: unknown type line: " + first);
    }
    std::printf("%.17g\n", estimate);
    return 0;
}

struct SweepArgs {
    std::string regime = "fixed";
    std::string budget_list;
    double alpha = 4.0;
    double eps = 0.1;
    double anchor = 0.5;
    std::string shape = "linear";
    int reps = 32;
    std::uint64_t seed = 0;
    int dims = 10;
    std::string scramble = "owen";
    int depth = 31;
    int cbc_max_m = 12;
    double cbc_ops_budget = 2e10;
    std::uint64_t candidates = 512;
    std::string out;
};

int run_sweep(const SweepArgs& a) {
    SweepRequest req;
    req.regime = a.regime;
    req.budgets = parse_budget_list(a.budget_list);
    req.alpha = a.alpha;
    req.eps = a.eps;
    req.anchor = a.anchor;
    req.shape = parse_shape(a.shape);
    req.dims = a.dims;
    req.cfg.reps = a.reps;
    req.cfg.seed = a.seed;
    req.cfg.scramble = parse_kind(a.scramble);
    req.cfg.depth = a.depth;
    req.cfg.cbc_max_m = a.cbc_max_m;
    req.cfg.cbc_ops_budget = a.cbc_ops_budget;
    req.cfg.candidates = a.candidates;

    const std::vector<ConvergenceRecord> recs = sweep(req);
    if (a.out.empty()) {
        save_records(recs, std::cout);
    } else {
        save_records(recs, a.out);
        std::printf("wrote %s (%zu records)\n", a.out.c_str(), recs.size());
    }
    return 0;
}

struct SlopeArgs {
    std::string in;
};

int run_slope(const SlopeArgs& a) {
    const std::vector<ConvergenceRecord> recs = load_records(a.in);
    const SlopeFit fit = fit_slope(recs);
    std::printf("slope = %.17g\n", fit.slope);
    std::printf("intercept = %.17g\n", fit.intercept);
    std::printf("r2 = %.17g\n", fit.r2);
    std::printf("excluded = %d\n", fit.excluded);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scrambled polynomial lattice quadrature"};
    app.require_subcommand(1);

    ConstructArgs ca;
    CLI::App* construct = app.add_subcommand("construct", "search a generating vector");
    construct->add_option("--m", ca.m, "resolution: n = 2^m points")->check(CLI::Range(1, 31));
    construct->add_option("--s", ca.s, "number of components")->check(CLI::PositiveNumber);
    construct->add_option("--alpha", ca.alpha, "weight decay exponent");
    construct->add_option("--search", ca.search, "candidate pool: full or random")
        ->check(CLI::IsMember({"full", "random"}));
    construct->add_option("--candidates", ca.candidates, "pool size for random search");
    construct->add_option("--seed", ca.seed, "seed for random search");
    construct->add_option("--out", ca.out, "output vector file");

    PointsArgs pa;
    CLI::App* points = app.add_subcommand("points", "emit the rule's points");
    points->add_option("--in", pa.in, "generating vector file");
    points->add_option("--dims", pa.dims, "components to emit (default: all in file)");
    points->add_option("--scramble", pa.scramble, "none, owen, or linear-shift")
        ->check(CLI::IsMember({"none", "owen", "linear-shift"}));
    points->add_option("--depth", pa.depth, "scramble digits");
    points->add_option("--seed", pa.seed, "scramble seed");
    points->add_option("--replicate", pa.replicate, "scramble replicate id");
    points->add_option("--out", pa.out, "output CSV");

    IntegrateArgs ia;
    CLI::App* integrate = app.add_subcommand("integrate", "one estimate from a plan file");
    integrate->add_option("--plan", ia.plan, "plan file (fixed or ml)")->required();
    integrate->add_option("--shape", ia.shape, "integrand factor shape")
        ->check(CLI::IsMember({"linear", "quadratic"}));
    integrate->add_option("--scramble", ia.scramble, "owen or linear-shift");
    integrate->add_option("--depth", ia.depth, "scramble digits");
    integrate->add_option("--seed", ia.seed, "master seed");
    integrate->add_option("--replicate", ia.replicate, "replicate id");
    integrate->add_option("--cbc-max-m", ia.cbc_max_m, "largest m searched by cbc");
    integrate->add_option("--cbc-ops-budget", ia.cbc_ops_budget, "kernel reads per search");
    integrate->add_option("--candidates", ia.candidates, "candidate pool per component");

    SweepArgs sa;
    CLI::App* sweepc = app.add_subcommand("sweep", "error-vs-cost sweep to CSV");
    sweepc->add_option("--regime", sa.regime, "fixed, ml, or rule")
        ->check(CLI::IsMember({"fixed", "ml", "rule"}));
    sweepc->add_option("--budget-list", sa.budget_list, "comma-separated budgets")->required();
    sweepc->add_option("--alpha", sa.alpha, "weight decay exponent");
    sweepc->add_option("--eps", sa.eps, "rate slack");
    sweepc->add_option("--anchor", sa.anchor, "anchor point in [0,1]");
    sweepc->add_option("--shape", sa.shape, "integrand factor shape")
        ->check(CLI::IsMember({"linear", "quadratic"}));
    sweepc->add_option("--reps", sa.reps, "replicates per budget");
    sweepc->add_option("--seed", sa.seed, "master seed");
    sweepc->add_option("--dims", sa.dims, "dimension for the rule regime");
    sweepc->add_option("--scramble", sa.scramble, "owen or linear-shift");
    sweepc->add_option("--depth", sa.depth, "scramble digits");
    sweepc->add_option("--cbc-max-m", sa.cbc_max_m, "largest m searched by cbc");
    sweepc->add_option("--cbc-ops-budget", sa.cbc_ops_budget, "kernel reads per search");
    sweepc->add_option("--candidates", sa.candidates, "candidate pool per component");
    sweepc->add_option("--out", sa.out, "output CSV (default: stdout)");

    SlopeArgs la;
    CLI::App* slope = app.add_subcommand("slope", "fit log2 rmse against log2 budget");
    slope->add_option("--in", la.in, "sweep CSV")->required();

    try {
        app.parse(argc, argv);
        if (construct->parsed()) return run_construct(ca);
        if (points->parsed()) return run_points(pa);
        if (integrate->parsed()) return run_integrate(ia);
        if (sweepc->parsed()) return run_sweep(sa);
        if (slope->parsed()) return run_slope(la);
        return 2;
    } catch (const CLI::ParseError& e) {
        std::fflush(stdout);
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const out_of_regime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
