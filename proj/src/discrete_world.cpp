#include "scgcomp/discrete_world.hpp"

#include "scgcomp/errors.hpp"
#include "scgcomp/rng.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace scgcomp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t bit(int position) { return std::uint64_t{1} << position; }

std::uint64_t action_mask(int upto_bits)
{
    std::uint64_t m = 0;
    for (int k = 0; 3 * k + 1 < upto_bits; ++k)
        m |= bit(3 * k + 1);
    return m;
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void DiscreteWorld::check() const
{
    if (tau < 1 || tau > kMaxTau)
        throw UsageError("world too large: tau must lie in 1.." + std::to_string(kMaxTau));
    if (!is_probability(p_l0))
        throw UsageError("Pr(L0 = 1) is not a probability");
    if (static_cast<int>(action.size()) != tau || static_cast<int>(censor.size()) != tau
        || static_cast<int>(outcome.size()) != tau || static_cast<int>(covariate.size()) != tau - 1)
        throw UsageError("world tables do not match tau");
    for (int k = 0; k < tau; ++k) {
        if (action[k].size() != Eigen::Index{1} << bits_before_action(k))
            throw UsageError("action table " + std::to_string(k) + " has the wrong size");
        for (Eigen::Index h = 0; h < action[k].size(); ++h) {
            if (!is_probability(action[k](h)))
                throw UsageError("action table entry is not a probability");
        }
    }
    for (int k = 1; k <= tau; ++k) {
        const Eigen::Index rows = Eigen::Index{1} << bits_before_interval(k);
        if (censor[k - 1].size() != rows || outcome[k - 1].rows() != rows || outcome[k - 1].cols() != 3)
            throw UsageError("interval " + std::to_string(k) + " tables have the wrong size");
        for (Eigen::Index h = 0; h < rows; ++h) {
            if (!is_probability(censor[k - 1](h)))
                throw UsageError("censoring table entry is not a probability");
            if (!is_state_distribution(outcome[k - 1].row(h).transpose().eval(), 1e-12))
                throw UsageError("outcome table row does not sum to 1");
        }
        if (k < tau) {
            if (covariate[k - 1].size() != Eigen::Index{1} << bits_before_covariate(k))
                throw UsageError("covariate table " + std::to_string(k) + " has the wrong size");
            for (Eigen::Index h = 0; h < covariate[k - 1].size(); ++h) {
                if (!is_probability(covariate[k - 1](h)))
                    throw UsageError("covariate table entry is not a probability");
            }
        }
    }
}

DiscreteWorld random_world(int tau, std::uint64_t seed, const WorldOptions& opt)
{
    if (tau < 1 || tau > DiscreteWorld::kMaxTau)
        throw UsageError("world too large: tau must lie in 1.." + std::to_string(DiscreteWorld::kMaxTau));
    const CounterRng rng(derive_seed(seed, {0x574F524C44ull}));
    auto prob = [&](std::uint64_t key, std::uint32_t stage, std::uint32_t draw = 0) {
        return opt.min_prob + (opt.max_prob - opt.min_prob) * rng.uniform(key, stage, draw);
    };
    DiscreteWorld w;
    w.tau = tau;
    w.p_l0 = prob(0, 1);
    for (int k = 0; k < tau; ++k) {
        const int bits = DiscreteWorld::bits_before_action(k);
        Eigen::VectorXd t(Eigen::Index{1} << bits);
        for (Eigen::Index h = 0; h < t.size(); ++h) {
            double p = prob(static_cast<std::uint64_t>(h), 100 + static_cast<std::uint32_t>(k));
            if (k > 0 && opt.sticky > 0.0) {
                const bool prev = (static_cast<std::uint64_t>(h) & bit(3 * k - 2)) != 0;
                p = opt.sticky * (prev ? 1.0 : 0.0) + (1.0 - opt.sticky) * p;
            }
            t(h) = p;
        }
        w.action.push_back(std::move(t));
    }
    for (int k = 1; k <= tau; ++k) {
        const int bits = DiscreteWorld::bits_before_interval(k);
        const auto rows = Eigen::Index{1} << bits;
        const std::uint64_t mask = opt.action_effect ? 0 : action_mask(bits);
        Eigen::VectorXd c(rows);
        Eigen::MatrixXd y(rows, 3);
        for (Eigen::Index h = 0; h < rows; ++h) {
            const auto key = static_cast<std::uint64_t>(h) & ~mask;
            c(h) = opt.censoring ? opt.max_censor * rng.uniform(static_cast<std::uint64_t>(h), 200 + k) : 0.0;
            Eigen::Vector3d v;
            for (int s = 0; s < 3; ++s)
                v(s) = opt.outcome_floor + rng.uniform(key, 300 + static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(s));
            v(2) *= opt.terminal_scale;
            y.row(h) = (v / v.sum()).transpose();
        }
        w.censor.push_back(std::move(c));
        w.outcome.push_back(std::move(y));
        if (k < tau) {
            const int cbits = DiscreteWorld::bits_before_covariate(k);
            const std::uint64_t cmask = opt.action_effect ? 0 : action_mask(cbits);
            Eigen::VectorXd l(Eigen::Index{1} << cbits);
            for (Eigen::Index h = 0; h < l.size(); ++h)
                l(h) = prob(static_cast<std::uint64_t>(h) & ~cmask, 400 + static_cast<std::uint32_t>(k));
            w.covariate.push_back(std::move(l));
        }
    }
    w.check();
    return w;
}

StateDistribution enumerate_truth(const DiscreteWorld& world, const ActionPlan& plan, int horizon)
{
    world.check();
    if (horizon < 1 || horizon > world.tau)
        throw UsageError("horizon outside 1.." + std::to_string(world.tau));
    if (!plan.is_natural() && plan.size() < horizon)
        throw UsageError("action plan is shorter than the horizon");
    StateDistribution acc = StateDistribution::Zero();

    // Calls next(history with A_k set, probability) for each action value.
    auto with_action = [&](int k, std::uint64_t h, double p, auto&& next) {
        if (!plan.is_natural()) {
            next(h | (plan.values()[static_cast<std::size_t>(k)] ? bit(3 * k + 1) : 0), p);
            return;
        }
        const double pa = world.action[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(h));
        next(h | bit(3 * k + 1), p * pa);
        next(h, p * (1.0 - pa));
    };

    auto interval = [&](auto&& self, int k, std::uint64_t h, double p) -> void {
        const auto dist = world.outcome[static_cast<std::size_t>(k - 1)].row(static_cast<Eigen::Index>(h));
        acc(2) += p * dist(2);
        for (int y = 0; y < 2; ++y) {
            const double py = p * dist(y);
            if (k == horizon) {
                acc(y) += py;
                continue;
            }
            const std::uint64_t hy = h | (y == 1 ? bit(3 * k - 1) : 0);
            const double pl = world.covariate[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(hy));
            for (int l = 0; l < 2; ++l) {
                const std::uint64_t hl = hy | (l ? bit(3 * k) : 0);
                with_action(k, hl, py * (l ? pl : 1.0 - pl),
                            [&](std::uint64_t ha, double pa) { self(self, k + 1, ha, pa); });
            }
        }
    };

    for (int l0 = 0; l0 < 2; ++l0) {
        const double p = l0 ? world.p_l0 : 1.0 - world.p_l0;
        with_action(0, l0 ? 1u : 0u, p, [&](std::uint64_t h, double pa) { interval(interval, 1, h, pa); });
    }
    return acc;
}

namespace {

std::vector<CovariateInfo> world_covariates(int tau)
{
    return {CovariateInfo{"L", CovariateType::Binary, true, tau > 1, {}}};
}

/// Path state used while enumerating or sampling observed records.
struct Record
{
    int l0 = 0;
    std::vector<int> a, c, y, l;
};

}  // namespace

ObservedLaw observed_law(const DiscreteWorld& world)
{
    world.check();
    const int tau = world.tau;
    std::vector<std::pair<Record, double>> leaves;

    auto interval = [&](auto&& self, int k, std::uint64_t h, Record rec, double p) -> void {
        if (p == 0.0)
            return;
        const double pc = world.censor[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(h));
        {
            Record r = rec;
            r.c[static_cast<std::size_t>(k)] = 1;
            for (int j = k + 1; j <= tau; ++j)
                r.c[static_cast<std::size_t>(j)] = 1;
            if (pc > 0.0)
                leaves.emplace_back(std::move(r), p * pc);
        }
        rec.c[static_cast<std::size_t>(k)] = 0;
        const double pu = p * (1.0 - pc);
        const auto dist = world.outcome[static_cast<std::size_t>(k - 1)].row(static_cast<Eigen::Index>(h));
        for (int y = 0; y < 3; ++y) {
            Record r = rec;
            r.y[static_cast<std::size_t>(k)] = y + 1;
            const double py = pu * dist(y);
            if (py == 0.0)
                continue;
            if (y == 2 || k == tau) {
                leaves.emplace_back(std::move(r), py);
                continue;
            }
            const std::uint64_t hy = h | (y == 1 ? bit(3 * k - 1) : 0);
            const double pl = world.covariate[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(hy));
            for (int l = 0; l < 2; ++l) {
                const std::uint64_t hl = hy | (l ? bit(3 * k) : 0);
                const double pa = world.action[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(hl));
                for (int a = 0; a < 2; ++a) {
                    Record ra = r;
                    ra.l[static_cast<std::size_t>(k)] = l;
                    ra.a[static_cast<std::size_t>(k)] = a;
                    self(self, k + 1, hl | (a ? bit(3 * k + 1) : 0), std::move(ra),
                         py * (l ? pl : 1.0 - pl) * (a ? pa : 1.0 - pa));
                }
            }
        }
    };

    for (int l0 = 0; l0 < 2; ++l0) {
        const double pl = l0 ? world.p_l0 : 1.0 - world.p_l0;
        const double pa = world.action[0](l0);
        for (int a0 = 0; a0 < 2; ++a0) {
            Record r;
            r.l0 = l0;
            r.a.assign(static_cast<std::size_t>(tau), kMissing);
            r.l.assign(static_cast<std::size_t>(tau), kMissing);
            r.c.assign(static_cast<std::size_t>(tau + 1), kMissing);
            r.y.assign(static_cast<std::size_t>(tau + 1), kMissing);
            r.c[0] = 0;
            r.a[0] = a0;
            interval(interval, 1, static_cast<std::uint64_t>(l0) | (a0 ? bit(1) : 0), std::move(r),
                     pl * (a0 ? pa : 1.0 - pa));
        }
    }

    ObservedLaw law;
    law.records = PanelColumns::empty(static_cast<Eigen::Index>(leaves.size()), tau, world_covariates(tau));
    law.mass.resize(static_cast<Eigen::Index>(leaves.size()));
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const auto& [r, p] = leaves[i];
        const auto row = static_cast<Eigen::Index>(i);
        law.records.ids[i] = "r" + std::to_string(i);
        law.records.covariate[0](row, 0) = r.l0;
        for (int t = 0; t < tau; ++t) {
            law.records.action(row, t) = r.a[static_cast<std::size_t>(t)];
            if (t > 0 && r.l[static_cast<std::size_t>(t)] != kMissing)
                law.records.covariate[0](row, t) = r.l[static_cast<std::size_t>(t)];
        }
        for (int k = 1; k <= tau; ++k) {
            law.records.censored(row, k) = r.c[static_cast<std::size_t>(k)];
            law.records.state(row, k) = r.y[static_cast<std::size_t>(k)];
        }
        law.mass(row) = p;
    }
    return law;
}

ObservedLaw empirical_law(const PanelDataset& data)
{
    const auto& cols = data.columns();
    std::map<std::vector<double>, Eigen::Index> index_of;
    std::vector<Eigen::Index> first_row;
    std::vector<double> count;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        std::vector<double> key;
        for (Eigen::Index t = 0; t < cols.state.cols(); ++t)
            key.push_back(cols.state(i, t));
        for (Eigen::Index t = 0; t < cols.censored.cols(); ++t)
            key.push_back(cols.censored(i, t));
        for (Eigen::Index t = 0; t < cols.action.cols(); ++t)
            key.push_back(cols.action(i, t));
        for (const auto& m : cols.covariate) {
            for (Eigen::Index t = 0; t < m.cols(); ++t)
                key.push_back(std::isnan(m(i, t)) ? -1e300 : m(i, t));
        }
        const auto [it, inserted] = index_of.emplace(std::move(key), static_cast<Eigen::Index>(first_row.size()));
        if (inserted) {
            first_row.push_back(i);
            count.push_back(0.0);
        }
        count[static_cast<std::size_t>(it->second)] += 1.0;
    }
    ObservedLaw law;
    law.records = data.select_rows(first_row).columns();
    law.mass = Eigen::Map<Eigen::VectorXd>(count.data(), static_cast<Eigen::Index>(count.size()))
               / static_cast<double>(data.n());
    return law;
}

namespace {

using Subset = std::vector<Eigen::Index>;

class NestedEvaluator
{
  public:
    NestedEvaluator(const ObservedLaw& law, const ActionPlan& plan, int horizon)
        : law_(law), cols_(law.records), plan_(plan), horizon_(horizon)
    {
    }

    StateDistribution run() const
    {
        Subset all(static_cast<std::size_t>(cols_.rows()));
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = static_cast<Eigen::Index>(i);
        const double total = mass(all);
        if (!(total > 0.0))
            throw PositivityError("observed law has no mass");
        StateDistribution out = StateDistribution::Zero();
        for (const auto& [key, group] : group_by(all, [&](Eigen::Index i) { return baseline_key(i); })) {
            out += (mass(group) / total) * after_action(group, 0, describe_baseline(group.front()));
        }
        return out;
    }

  private:
    template<typename KeyFn>
    std::map<std::vector<double>, Subset> group_by(const Subset& s, KeyFn key) const
    {
        std::map<std::vector<double>, Subset> out;
        for (Eigen::Index i : s)
            out[key(i)].push_back(i);
        return out;
    }

    double mass(const Subset& s) const
    {
        double m = 0.0;
        for (Eigen::Index i : s)
            m += law_.mass(i);
        return m;
    }

    std::vector<double> baseline_key(Eigen::Index i) const
    {
        std::vector<double> key{static_cast<double>(cols_.state(i, 0))};
        for (const auto& m : cols_.covariate)
            key.push_back(std::isnan(m(i, 0)) ? -1e300 : m(i, 0));
        return key;
    }

    std::vector<double> covariate_key(Eigen::Index i, int k) const
    {
        std::vector<double> key;
        for (std::size_t j = 0; j < cols_.covariate.size(); ++j) {
            if (cols_.covariates[j].time_varying)
                key.push_back(std::isnan(cols_.covariate[j](i, k)) ? -1e300 : cols_.covariate[j](i, k));
        }
        return key;
    }

    std::string describe_baseline(Eigen::Index i) const
    {
        std::string d;
        if (cols_.has_baseline_state)
            d = "Y0=" + std::to_string(cols_.state(i, 0));
        for (std::size_t j = 0; j < cols_.covariates.size(); ++j) {
            if (cols_.covariates[j].baseline)
                d += (d.empty() ? "" : ",") + std::string("L0_") + cols_.covariates[j].name + "="
                     + std::to_string(cols_.covariate[j](i, 0));
        }
        return d;
    }

    /// Integrates over (or fixes) A_t for records sharing history through L_t.
    StateDistribution after_action(const Subset& s, int t, const std::string& desc) const
    {
        if (!plan_.is_natural()) {
            const int a = plan_.values()[static_cast<std::size_t>(t)];
            Subset follow;
            for (Eigen::Index i : s) {
                if (cols_.action(i, t) == a)
                    follow.push_back(i);
            }
            const std::string d = desc + ",A" + std::to_string(t) + "=" + std::to_string(a);
            if (!(mass(follow) > 0.0))
                throw PositivityError("positivity violation: zero probability cell " + d);
            return interval(follow, t + 1, d);
        }
        StateDistribution out = StateDistribution::Zero();
        const double total = mass(s);
        for (const auto& [key, group] : group_by(s, [&](Eigen::Index i) {
                 return std::vector<double>{static_cast<double>(cols_.action(i, t))};
             })) {
            out += (mass(group) / total)
                   * interval(group, t + 1, desc + ",A" + std::to_string(t) + "=" + std::to_string(int(key[0])));
        }
        return out;
    }

    /// Expected horizon state given history through A_{k-1} and C_k = 0.
    StateDistribution interval(const Subset& s, int k, const std::string& desc) const
    {
        Subset unc;
        for (Eigen::Index i : s) {
            if (cols_.censored(i, k) == 0)
                unc.push_back(i);
        }
        const double denom = mass(unc);
        if (!(denom > 0.0))
            throw PositivityError("positivity violation: zero probability cell " + desc + ",C"
                                  + std::to_string(k) + "=0");
        StateDistribution out = StateDistribution::Zero();
        for (const auto& [ykey, by_y] : group_by(unc, [&](Eigen::Index i) {
                 return std::vector<double>{static_cast<double>(cols_.state(i, k))};
             })) {
            const int y = static_cast<int>(ykey[0]);
            const double share = mass(by_y) / denom;
            if (y == code(OutcomeState::Terminal)) {
                out(2) += share;
                continue;
            }
            if (y < 1 || y > 3)
                throw ValidationError("observed law has a missing outcome for an uncensored record");
            if (k == horizon_) {
                out(y - 1) += share;
                continue;
            }
            const std::string dy = desc + ",Y" + std::to_string(k) + "=" + std::to_string(y);
            for (const auto& [lkey, by_l] : group_by(by_y, [&](Eigen::Index i) { return covariate_key(i, k); })) {
                std::string dl = dy;
                for (double v : lkey)
                    dl += ",L" + std::to_string(k) + "=" + std::to_string(v);
                out += (mass(by_l) / denom) * after_action(by_l, k, dl);
            }
        }
        return out;
    }

    const ObservedLaw& law_;
    const PanelColumns& cols_;
    const ActionPlan& plan_;
    int horizon_;
};

}  // namespace

StateDistribution nested_formula_truth(const ObservedLaw& law, const ActionPlan& plan, int horizon)
{
    if (horizon < 1 || horizon > law.records.tau)
        throw UsageError("horizon outside 1.." + std::to_string(law.records.tau));
    if (!plan.is_natural() && plan.size() < horizon)
        throw UsageError("action plan is shorter than the horizon");
    return NestedEvaluator(law, plan, horizon).run();
}

StateDistribution nested_formula_truth(const DiscreteWorld& world, const ActionPlan& plan, int horizon)
{
    return nested_formula_truth(observed_law(world), plan, horizon);
}

PanelDataset world_sample(const DiscreteWorld& world, Eigen::Index n, std::uint64_t seed)
{
    world.check();
    if (n < 1)
        throw UsageError("sample size must be at least 1");
    const int tau = world.tau;
    const CounterRng rng(derive_seed(seed, {0x53414D504C45ull}));
    auto cols = PanelColumns::empty(n, tau, world_covariates(tau));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto e = static_cast<std::uint64_t>(i);
        cols.ids[static_cast<std::size_t>(i)] = std::to_string(i + 1);
        const int l0 = rng.bernoulli(world.p_l0, e, 1) ? 1 : 0;
        const int a0 = rng.bernoulli(world.action[0](l0), e, 10) ? 1 : 0;
        cols.covariate[0](i, 0) = l0;
        cols.action(i, 0) = a0;
        std::uint64_t h = static_cast<std::uint64_t>(l0) | (a0 ? bit(1) : 0);
        for (int k = 1; k <= tau; ++k) {
            if (rng.bernoulli(world.censor[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(h)), e,
                              20 + static_cast<std::uint32_t>(k))) {
                for (int j = k; j <= tau; ++j)
                    cols.censored(i, j) = 1;
                break;
            }
            cols.censored(i, k) = 0;
            const auto dist = world.outcome[static_cast<std::size_t>(k - 1)].row(static_cast<Eigen::Index>(h));
            const int y = rng.categorical3(dist(0), dist(1), e, 30 + static_cast<std::uint32_t>(k)) + 1;
            cols.state(i, k) = y;
            if (y == code(OutcomeState::Terminal) || k == tau)
                break;
            h |= y == 2 ? bit(3 * k - 1) : 0;
            const int l = rng.bernoulli(world.covariate[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(h)),
                                        e, 40 + static_cast<std::uint32_t>(k))
                              ? 1
                              : 0;
            h |= l ? bit(3 * k) : 0;
            const int a = rng.bernoulli(world.action[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(h)), e,
                                        10 + static_cast<std::uint32_t>(k))
                              ? 1
                              : 0;
            h |= a ? bit(3 * k + 1) : 0;
            cols.covariate[0](i, k) = l;
            cols.action(i, k) = a;
        }
    }
    return PanelDataset(std::move(cols));
}

Eigen::Index plan_followers(const PanelDataset& data, const ActionPlan& plan, int horizon)
{
    if (plan.is_natural())
        return data.n();
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        bool follows = true;
        for (int t = 0; t < horizon && follows; ++t) {
            const int a = data.action(i, t);
            if (a != kMissing && a != plan.values()[static_cast<std::size_t>(t)])
                follows = false;
        }
        count += follows ? 1 : 0;
    }
    return count;
}

double plan_effective_size(const DiscreteWorld& world, const PanelDataset& data, const ActionPlan& plan,
                           int horizon)
{
    world.check();
    if (plan.is_natural() || plan.size() < horizon)
        throw UsageError("effective size needs a deterministic plan covering the horizon");
    if (data.tau() != world.tau || horizon < 1 || horizon > world.tau)
        throw UsageError("data and horizon do not match the world");
    const auto& a_star = plan.values();
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const int l0 = data.covariate(0, i, 0) > 0.5 ? 1 : 0;
        if (data.action(i, 0) != a_star[0])
            continue;
        const double p0 = world.action[0](l0);
        double w = 1.0 / (a_star[0] ? p0 : 1.0 - p0);
        std::uint64_t h = static_cast<std::uint64_t>(l0) | (a_star[0] ? bit(1) : 0);
        for (int k = 1; k <= horizon && w > 0.0; ++k) {
            if (data.censored(i, k) != 0) {
                w = 0.0;
                break;
            }
            w /= 1.0 - world.censor[static_cast<std::size_t>(k - 1)](static_cast<Eigen::Index>(h));
            const int y = data.state(i, k);
            if (y == code(OutcomeState::Terminal) || k == horizon)
                break;
            h |= y == 2 ? bit(3 * k - 1) : 0;
            h |= data.covariate(0, i, k) > 0.5 ? bit(3 * k) : 0;
            const int a = a_star[static_cast<std::size_t>(k)];
            if (data.action(i, k) != a) {
                w = 0.0;
                break;
            }
            const double pk = world.action[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(h));
            w /= a ? pk : 1.0 - pk;
            h |= a ? bit(3 * k + 1) : 0;
        }
        sum += w;
        sum_sq += w * w;
    }
    return sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
}

}  // namespace scgcomp
