#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cdl/strategy.hpp"

namespace cdl {

// Per-epoch participation costs. Total cost of a cooperating device is
// c_plocal + c_m + c_m_prime + c_pglobal; a defector pays only c_plocal.
struct CostModel {
    double c_plocal = 0.0;
    double c_pglobal = 0.0;
    double c_m = 0.0;       // upload
    double c_m_prime = 0.0; // download

    double total() const { return c_plocal + c_m + c_m_prime + c_pglobal; }
    double comm_and_global() const { return c_m + c_m_prime + c_pglobal; }
    void validate() const;
};

struct PayoffConfig {
    double benefit = 1.0; // B
    CostModel costs;
    void validate() const;
};

// Loss table indexed by player: theta (solo), phi (collaborative), tau
// (auxiliary score, informational). All losses must be strictly positive so
// B/loss is finite; builders clamp at 1e-12.
struct LossTable {
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> tau;

    std::size_t players() const { return theta.size(); }
    void validate() const;
};

constexpr double kLossFloor = 1e-12;
double clamp_loss(double value);

double payoff_cp(double phi_i, const PayoffConfig& cfg); // B/phi - total cost
double payoff_df(double theta_i, const PayoffConfig& cfg); // B/theta - c_plocal

// The collaborative loss player i would see when coop_count players (i among
// them) cooperate. A lone cooperator has no partners, so phi(i, 1) = theta_i.
using PhiFn = std::function<double(std::size_t player, std::size_t coop_count)>;

// Table phi for two or more cooperators, theta for a lone one.
PhiFn fixed_phi(const LossTable& table);

// phi_i(c) = theta_i * (1 - gain * (c - 1) / (N - 1)), gain in [0, 1).
PhiFn scaled_phi(const LossTable& table, double gain);

struct GameOutcome {
    StrategyProfile profile;
    std::vector<double> payoffs;
    std::size_t cooperators = 0;
    std::size_t defectors = 0;
};

GameOutcome profile_payoffs(const StrategyProfile& profile, const LossTable& table,
                            const PayoffConfig& cfg);
GameOutcome profile_payoffs(const StrategyProfile& profile, const LossTable& table,
                            const PayoffConfig& cfg, const PhiFn& phi);

struct DeviationWitness {
    std::size_t player = 0;
    Strategy to = Strategy::DF;
    double gain = 0.0;
};

// True iff no single-player flip strictly increases that player's payoff
// (ties do not break equilibrium). On false, fills the witness if given.
bool is_nash(const StrategyProfile& profile, const LossTable& table, const PayoffConfig& cfg,
             DeviationWitness* witness = nullptr);
bool is_nash(const StrategyProfile& profile, const LossTable& table, const PayoffConfig& cfg,
             const PhiFn& phi, DeviationWitness* witness = nullptr);

constexpr std::size_t kMaxEnumerationPlayers = 20;

// All pure-strategy equilibria in lexicographic order (CP before DF,
// player 0 most significant). Refuses N > kMaxEnumerationPlayers.
std::vector<StrategyProfile> enumerate_nash(const LossTable& table, const PayoffConfig& cfg);
std::vector<StrategyProfile> enumerate_nash(const LossTable& table, const PayoffConfig& cfg,
                                            const PhiFn& phi);

// True iff defecting from All-CP strictly improves player i:
// B * (1/phi_i - 1/theta_i) < c_m + c_m' + c_pglobal.
bool free_rider_condition(std::size_t player, const LossTable& table, const PayoffConfig& cfg);

StrategyProfile uniform_profile(std::size_t players, Strategy s);

} // namespace cdl
