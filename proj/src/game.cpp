#include "cdl/game.hpp"

#include <cmath>
#include <string>

#include "cdl/error.hpp"

namespace cdl {

namespace {

std::size_t count_cooperators(const StrategyProfile& profile) {
    std::size_t c = 0;
    for (Strategy s : profile) c += (s == Strategy::CP) ? 1 : 0;
    return c;
}

void check_profile(const StrategyProfile& profile, const LossTable& table) {
    table.validate();
    if (profile.size() != table.players()) {
        throw ContractViolation("profile has " + std::to_string(profile.size()) + " players, loss table has " +
                                std::to_string(table.players()));
    }
}

} // namespace

void CostModel::validate() const {
    if (c_plocal < 0 || c_pglobal < 0 || c_m < 0 || c_m_prime < 0) {
        throw ContractViolation("costs must be non-negative");
    }
}

void PayoffConfig::validate() const {
    if (!(benefit > 0.0)) throw ContractViolation("benefit coefficient B must be positive");
    costs.validate();
}

void LossTable::validate() const {
    if (!phi.empty() && phi.size() != theta.size()) {
        throw ContractViolation("loss table: phi has " + std::to_string(phi.size()) + " entries, theta has " +
                                std::to_string(theta.size()));
    }
    if (!tau.empty() && tau.size() != theta.size()) {
        throw ContractViolation("loss table: tau has " + std::to_string(tau.size()) + " entries, theta has " +
                                std::to_string(theta.size()));
    }
    auto check = [](const std::vector<double>& v, const char* name) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
                throw ContractViolation(std::string("loss table: ") + name + " for player " +
                                        std::to_string(i) + " must be positive and finite");
            }
        }
    };
    check(theta, "theta");
    check(phi, "phi");
    check(tau, "tau");
}

double clamp_loss(double value) { return value > kLossFloor ? value : kLossFloor; }

double payoff_cp(double phi_i, const PayoffConfig& cfg) {
    cfg.validate();
    if (!(phi_i > 0.0)) throw ContractViolation("payoff_cp: phi must be positive");
    return cfg.benefit / phi_i - cfg.costs.total();
}

double payoff_df(double theta_i, const PayoffConfig& cfg) {
    cfg.validate();
    if (!(theta_i > 0.0)) throw ContractViolation("payoff_df: theta must be positive");
    return cfg.benefit / theta_i - cfg.costs.c_plocal;
}

PhiFn fixed_phi(const LossTable& table) {
    if (table.phi.size() != table.theta.size()) {
        throw ContractViolation("fixed_phi requires a phi entry per player");
    }
    return [theta = table.theta, phi = table.phi](std::size_t player, std::size_t coop_count) {
        if (player >= theta.size()) throw ContractViolation("phi: player index out of range");
        if (coop_count < 1) throw ContractViolation("phi: cooperator count must be >= 1");
        return coop_count >= 2 ? phi[player] : theta[player];
    };
}

PhiFn scaled_phi(const LossTable& table, double gain) {
    if (!(gain >= 0.0) || gain >= 1.0) throw ContractViolation("scaled_phi: gain must be in [0, 1)");
    const std::size_t n = table.players();
    return [theta = table.theta, gain, n](std::size_t player, std::size_t coop_count) {
        if (player >= theta.size()) throw ContractViolation("phi: player index out of range");
        if (coop_count < 1 || coop_count > n) throw ContractViolation("phi: cooperator count out of range");
        if (n == 1 || coop_count == 1) return theta[player];
        const double frac = static_cast<double>(coop_count - 1) / static_cast<double>(n - 1);
        return clamp_loss(theta[player] * (1.0 - gain * frac));
    };
}

GameOutcome profile_payoffs(const StrategyProfile& profile, const LossTable& table,
                            const PayoffConfig& cfg) {
    return profile_payoffs(profile, table, cfg, fixed_phi(table));
}

GameOutcome profile_payoffs(const StrategyProfile& profile, const LossTable& table,
                            const PayoffConfig& cfg, const PhiFn& phi) {
    check_profile(profile, table);
    cfg.validate();
    GameOutcome out;
    out.profile = profile;
    out.cooperators = count_cooperators(profile);
    out.defectors = profile.size() - out.cooperators;
    out.payoffs.resize(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        out.payoffs[i] = profile[i] == Strategy::CP ? payoff_cp(phi(i, out.cooperators), cfg)
                                                    : payoff_df(table.theta[i], cfg);
    }
    return out;
}

bool is_nash(const StrategyProfile& profile, const LossTable& table, const PayoffConfig& cfg,
             DeviationWitness* witness) {
    return is_nash(profile, table, cfg, fixed_phi(table), witness);
}

bool is_nash(const StrategyProfile& profile, const LossTable& table, const PayoffConfig& cfg,
             const PhiFn& phi, DeviationWitness* witness) {
    check_profile(profile, table);
    cfg.validate();
    const std::size_t coop = count_cooperators(profile);
    for (std::size_t i = 0; i < profile.size(); ++i) {
        double now, flipped;
        if (profile[i] == Strategy::CP) {
            now = payoff_cp(phi(i, coop), cfg);
            flipped = payoff_df(table.theta[i], cfg);
        } else {
            now = payoff_df(table.theta[i], cfg);
            flipped = payoff_cp(phi(i, coop + 1), cfg);
        }
        if (flipped > now) {
            if (witness) {
                witness->player = i;
                witness->to = profile[i] == Strategy::CP ? Strategy::DF : Strategy::CP;
                witness->gain = flipped - now;
            }
            return false;
        }
    }
    return true;
}

std::vector<StrategyProfile> enumerate_nash(const LossTable& table, const PayoffConfig& cfg) {
    return enumerate_nash(table, cfg, fixed_phi(table));
}

std::vector<StrategyProfile> enumerate_nash(const LossTable& table, const PayoffConfig& cfg,
                                            const PhiFn& phi) {
    table.validate();
    const std::size_t n = table.players();
    if (n == 0) throw ContractViolation("enumerate_nash: empty loss table");
    if (n > kMaxEnumerationPlayers) {
        throw ContractViolation("enumerate_nash: " + std::to_string(n) + " players exceeds the 2^N bound of " +
                                std::to_string(kMaxEnumerationPlayers));
    }
    std::vector<StrategyProfile> found;
    StrategyProfile profile(n, Strategy::CP);
    const std::uint64_t limit = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < limit; ++mask) {
        // player 0 in the most significant bit: increasing mask is
        // lexicographic order over the profile with CP < DF
        for (std::size_t i = 0; i < n; ++i) {
            profile[i] = (mask >> (n - 1 - i)) & 1 ? Strategy::DF : Strategy::CP;
        }
        if (is_nash(profile, table, cfg, phi)) found.push_back(profile);
    }
    return found;
}

bool free_rider_condition(std::size_t player, const LossTable& table, const PayoffConfig& cfg) {
    table.validate();
    cfg.validate();
    if (player >= table.players()) throw ContractViolation("free_rider_condition: player index out of range");
    if (table.phi.size() != table.theta.size()) {
        throw ContractViolation("free_rider_condition requires a phi entry per player");
    }
    const double benefit_drop = cfg.benefit * (1.0 / table.phi[player] - 1.0 / table.theta[player]);
    return benefit_drop < cfg.costs.comm_and_global();
}

StrategyProfile uniform_profile(std::size_t players, Strategy s) {
    return StrategyProfile(players, s);
}

} // namespace cdl
