#include "swarmtraj/config.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace swarmtraj
{

using json = nlohmann::json;

namespace
{

const char *regimeName(WarpRegime r)
{
    return r == WarpRegime::OneSided ? "one-sided" : "two-sided";
}

class Reader
{
public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw Error(ErrorCode::InvalidConfig, "'" + path_ + "' must be an object");
    }

    template <class T> void operator()(const char *key, T &out)
    {
        seen_.insert(key);
        if (!j_.contains(key))
            return;
        try
        {
            out = j_.at(key).get<T>();
        }
        catch (const json::exception &)
        {
            throw Error(ErrorCode::InvalidConfig, "bad value for '" + name(key) + "'");
        }
    }

    void operator()(const char *key, WarpRegime &out)
    {
        std::string s = regimeName(out);
        (*this)(key, s);
        if (s == "one-sided")
            out = WarpRegime::OneSided;
        else if (s == "two-sided")
            out = WarpRegime::TwoSided;
        else
            throw Error(ErrorCode::InvalidConfig, "'" + name(key) + "' must be one-sided or two-sided");
    }

    void operator()(const char *key, std::optional<Aabb> &out)
    {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null())
            return;
        std::array<double, 6> v{};
        try
        {
            v = j_.at(key).get<std::array<double, 6>>();
        }
        catch (const json::exception &)
        {
            throw Error(ErrorCode::InvalidConfig, "'" + name(key) + "' must be [xlo, ylo, zlo, xhi, yhi, zhi]");
        }
        out = Aabb(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]));
    }

    template <class F> void section(const char *key, F &&visit)
    {
        seen_.insert(key);
        if (!j_.contains(key))
            return;
        Reader sub(j_.at(key), name(key));
        visit(sub);
        sub.finish();
    }

    void finish() const
    {
        for (const auto &item : j_.items())
        {
            if (!seen_.count(item.key()))
                throw Error(ErrorCode::InvalidConfig, "unknown key '" + name(item.key()) + "'");
        }
    }

private:
    std::string name(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer
{
public:
    explicit Writer(json &j) : j_(j) { j_ = json::object(); }

    template <class T> void operator()(const char *key, T &v) { j_[key] = v; }
    void operator()(const char *key, WarpRegime &r) { j_[key] = regimeName(r); }
    void operator()(const char *key, std::optional<Aabb> &b)
    {
        if (b)
            j_[key] = {b->lo(0), b->lo(1), b->lo(2), b->hi(0), b->hi(1), b->hi(2)};
        else
            j_[key] = nullptr;
    }

    template <class F> void section(const char *key, F &&visit)
    {
        json sub;
        Writer w(sub);
        visit(w);
        j_[key] = sub;
    }

private:
    json &j_;
};

template <class IO> void visitAll(IO &io, RunConfig &c)
{
    PlannerConfig &p = c.planner;
    io.section("vehicle", [&](auto &s) {
        s("mass", p.model.mass);
        s("gravity", p.model.gravity);
        s("drag_h", p.model.dragH);
        s("drag_v", p.model.dragV);
        s("parasitic", p.model.parasitic);
        s("speed_smoothing", p.model.eta);
    });
    io.section("limits", [&](auto &s) {
        s("v_max", p.limits.vMax);
        s("omega_max", p.limits.omegaMax);
        s("theta_max", p.limits.thetaMax);
        s("f_min", p.limits.fMin);
        s("f_max", p.limits.fMax);
    });
    io.section("margins", [&](auto &s) {
        s("radius", p.margins.radius);
        s("temporal", p.margins.temporal);
        s("vertical", p.margins.vertical);
    });
    io.section("penalty", [&](auto &s) {
        s("mu", p.penalty.mu);
        s("w_corridor", p.penalty.wCorridor);
        s("w_capsule", p.penalty.wCapsule);
        s("w_limits", p.penalty.wLimits);
        s("rho", p.penalty.rho);
        s("nodes_per_piece", p.penalty.nodesPerPiece);
        s("capsule_nodes_t", p.penalty.capsuleNodesT);
        s("capsule_nodes_v", p.penalty.capsuleNodesV);
    });
    io.section("solver", [&](auto &s) {
        s("memory", p.solver.lbfgs.memory);
        s("c1", p.solver.lbfgs.c1);
        s("c2", p.solver.lbfgs.c2);
        s("grad_tol", p.solver.lbfgs.gradTol);
        s("rel_cost_tol", p.solver.lbfgs.relCostTol);
        s("past", p.solver.lbfgs.past);
        s("max_iterations", p.solver.lbfgs.maxIterations);
        s("max_line_search", p.solver.lbfgs.maxLineSearch);
        s("max_step", p.solver.lbfgs.maxStep);
        s("continuation_rounds", p.solver.continuationRounds);
        s("continuation_factor", p.solver.continuationFactor);
    });
    io.section("rrt", [&](auto &s) {
        s("step", p.rrt.step);
        s("goal_bias", p.rrt.goalBias);
        s("iterations", p.rrt.iterations);
        s("informed_iterations", p.rrt.informedIterations);
    });
    io.section("schedule", [&](auto &s) {
        s("samples", p.schedule.samples);
        s("horizon_factor", p.schedule.horizonFactor);
        s("resolution_factor", p.schedule.resolutionFactor);
        s("parent_candidates", p.schedule.parentCandidates);
        s("departure_bias", p.schedule.departureBias);
    });
    io.section("planner", [&](auto &s) {
        s("a_max", p.aMax);
        s("yaw", p.yaw);
        s("refine_delta", p.refineDelta);
        s("radius_inflation", p.radiusInflation);
        s("temporal_inflation", p.temporalInflation);
        s("limit_margin", p.limitMargin);
        s("corridor_margin", p.corridorMargin);
        s("schedule_drag_share", p.scheduleDragShare);
        s("check_step", p.checkStep);
        s("check_tolerance", p.checkTolerance);
        s("node_spacing", p.nodeSpacing);
        s("capsule_spacing", p.capsuleSpacing);
        s("max_nodes_per_piece", p.maxNodesPerPiece);
        s("retries", p.retries);
    });
    io.section("polyhedronize", [&](auto &s) {
        s("epsilon", c.polyhedronize.epsilon);
        s("local_half_width", c.polyhedronize.localHalfWidth);
        s("clearance", c.polyhedronize.clearance);
        s("attempt_budget", c.polyhedronize.attemptBudget);
        s("confirm_samples", c.polyhedronize.confirmSamples);
        s("max_polytopes", c.polyhedronize.maxPolytopes);
    });
    io.section("robustness", [&](auto &s) {
        s("grid", c.robustness.grid);
        s("trials", c.robustness.trials);
        s("regime", c.robustness.regime);
        s("max_rate", c.robustness.maxRate);
        s("sample_step", c.robustness.sampleStep);
    });
    io("cloud_bounds", c.cloudBounds);
    io("profile_rate", c.profileRate);
    io("seed", c.seed);
}

} // namespace

RunConfig RunConfig::defaults()
{
    RunConfig c;
    auto &p = c.planner;
    p.model.mass = 1.9;
    p.model.dragH = 0.475;
    p.model.dragV = 0.475;
    p.model.parasitic = 0.01;
    p.limits.vMax = 13.0;
    p.limits.omegaMax = 2.0 * std::numbers::pi / 3.0;
    p.limits.thetaMax = std::numbers::pi / 9.0;
    p.limits.fMin = 9.5;
    p.limits.fMax = 28.5;
    p.penalty.rho = 1e-3;
    p.penalty.mu = 1e-2;
    p.penalty.wCorridor = p.penalty.wCapsule = p.penalty.wLimits = 1e5;
    p.margins.temporal = 4.0;
    p.margins.radius = 15.0;
    p.margins.vertical = 0.5;
    c.polyhedronize.epsilon = 1e-5;
    return c;
}

void RunConfig::validate() const
{
    planner.validate();
    if (!(polyhedronize.epsilon > 0.0 && polyhedronize.epsilon < 1.0) || !(polyhedronize.localHalfWidth > 0.0))
        throw Error(ErrorCode::InvalidConfig, "invalid polyhedronize settings");
    DisturbanceSpec d;
    d.trials = robustness.trials;
    d.maxRate = robustness.maxRate;
    d.sampleStep = robustness.sampleStep;
    d.validate();
    for (double g : robustness.grid)
    {
        if (!(g >= 0.0))
            throw Error(ErrorCode::InvalidConfig, "robustness grid entries must be non-negative");
    }
    if (cloudBounds && !cloudBounds->valid())
        throw Error(ErrorCode::InvalidConfig, "cloud_bounds must have lo <= hi");
    if (!(profileRate > 0.0))
        throw Error(ErrorCode::InvalidConfig, "profile_rate must be positive");
}

RunConfig parseRunConfig(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c = RunConfig::defaults();
    Reader r(j, "");
    visitAll(r, c);
    r.finish();
    c.validate();
    return c;
}

RunConfig loadRunConfig(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parseRunConfig(ss.str());
}

std::string dumpRunConfig(const RunConfig &cfg)
{
    RunConfig c = cfg;
    json j;
    Writer w(j);
    visitAll(w, c);
    return j.dump(2) + "\n";
}

} // namespace swarmtraj
