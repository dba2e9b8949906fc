#include <random>

#include <doctest.h>

#include "cdl/error.hpp"
#include "cdl/game.hpp"
#include "oracles.hpp"

using namespace cdl;

namespace {

PayoffConfig tenth_costs(double benefit) {
    return PayoffConfig{benefit, CostModel{0.1, 0.1, 0.1, 0.1}};
}

LossTable random_table(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> theta_dist(0.2, 4.0);
    std::uniform_real_distribution<double> ratio(0.3, 1.4); // phi may exceed theta
    LossTable t;
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = theta_dist(rng);
        t.theta.push_back(theta);
        t.phi.push_back(theta * ratio(rng));
    }
    return t;
}

PayoffConfig random_payoff(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> b(0.2, 5.0);
    std::uniform_real_distribution<double> c(0.0, 0.8);
    return PayoffConfig{b(rng), CostModel{c(rng), c(rng), c(rng), c(rng)}};
}

} // namespace

TEST_CASE("payoff formulas substitute directly") {
    CHECK(payoff_cp(0.5, tenth_costs(1.0)) == doctest::Approx(1.6));
    CHECK(payoff_df(1.0, tenth_costs(1.0)) == doctest::Approx(0.9));

    const PayoffConfig free_costs{2.0, CostModel{}};
    CHECK(payoff_cp(0.5, free_costs) == doctest::Approx(4.0));
    CHECK(payoff_df(0.5, free_costs) == doctest::Approx(4.0)); // theta == phi, no comm costs

    CHECK(payoff_cp(1e9, tenth_costs(1.0)) == doctest::Approx(-0.4).epsilon(1e-6));
    CHECK_THROWS_AS(payoff_cp(0.0, tenth_costs(1.0)), ContractViolation);
    CHECK_THROWS_AS(payoff_df(-1.0, tenth_costs(1.0)), ContractViolation);
}

TEST_CASE("payoffs fall in loss and rise in B") {
    const PayoffConfig cfg = tenth_costs(1.0);
    double previous_cp = 1e300, previous_df = 1e300;
    for (double loss_value = 0.1; loss_value <= 3.0; loss_value += 0.1) {
        CHECK(payoff_cp(loss_value, cfg) < previous_cp);
        CHECK(payoff_df(loss_value, cfg) < previous_df);
        previous_cp = payoff_cp(loss_value, cfg);
        previous_df = payoff_df(loss_value, cfg);
    }
    double prev_cp_b = -1e300, prev_df_b = -1e300;
    for (double b = 0.5; b <= 5.0; b += 0.25) {
        const PayoffConfig c{b, CostModel{0.1, 0.1, 0.1, 0.1}};
        CHECK(payoff_cp(0.7, c) > prev_cp_b);
        CHECK(payoff_df(0.7, c) > prev_df_b);
        prev_cp_b = payoff_cp(0.7, c);
        prev_df_b = payoff_df(0.7, c);
    }
}

TEST_CASE("the hand-filled 2x2 table") {
    const LossTable table{{1.0, 1.0}, {0.5, 0.5}, {}};
    const PayoffConfig cfg = tenth_costs(1.0);

    const auto cp_cp = profile_payoffs({Strategy::CP, Strategy::CP}, table, cfg);
    CHECK(cp_cp.payoffs[0] == doctest::Approx(1.6));
    CHECK(cp_cp.payoffs[1] == doctest::Approx(1.6));
    CHECK(cp_cp.cooperators == 2);

    const auto df_df = profile_payoffs({Strategy::DF, Strategy::DF}, table, cfg);
    CHECK(df_df.payoffs[0] == doctest::Approx(0.9));
    CHECK(df_df.payoffs[1] == doctest::Approx(0.9));
    CHECK(df_df.defectors == 2);

    // unilateral defection leaves the remaining cooperator alone (phi -> theta)
    const auto df_cp = profile_payoffs({Strategy::DF, Strategy::CP}, table, cfg);
    CHECK(df_cp.payoffs[0] == doctest::Approx(0.9));
    CHECK(df_cp.payoffs[1] == doctest::Approx(0.6));

    // both pure-symmetric profiles are equilibria in this table
    CHECK(is_nash({Strategy::DF, Strategy::DF}, table, cfg));
    CHECK(is_nash({Strategy::CP, Strategy::CP}, table, cfg));
    // the mixed profile is doubly unstable; the first deviation found is the
    // defector joining (0.9 -> 1.6), the cooperator leaving (0.6 -> 0.9) also gains
    DeviationWitness w;
    CHECK_FALSE(is_nash({Strategy::DF, Strategy::CP}, table, cfg, &w));
    CHECK(w.player == 0);
    CHECK(w.to == Strategy::CP);
    CHECK(w.gain == doctest::Approx(0.7));
}

TEST_CASE("All-DF profiles use only theta and c_plocal") {
    const LossTable table{{1.0, 2.0, 4.0}, {0.9, 1.9, 3.9}, {}};
    PayoffConfig cfg = tenth_costs(2.0);
    cfg.costs.c_pglobal = 123.0; // must not matter for defectors
    const auto outcome = profile_payoffs(uniform_profile(3, Strategy::DF), table, cfg);
    CHECK(outcome.payoffs[0] == doctest::Approx(2.0 / 1.0 - 0.1));
    CHECK(outcome.payoffs[1] == doctest::Approx(2.0 / 2.0 - 0.1));
    CHECK(outcome.payoffs[2] == doctest::Approx(2.0 / 4.0 - 0.1));
}

TEST_CASE("a lone cooperator earns theta-level benefit") {
    const LossTable table{{2.0}, {0.5}, {}};
    const auto outcome = profile_payoffs({Strategy::CP}, table, tenth_costs(1.0));
    CHECK(outcome.payoffs[0] == doctest::Approx(1.0 / 2.0 - 0.4)); // phi = theta by the no-partner rule
}

TEST_CASE("missing loss entries are reported by player") {
    LossTable table{{1.0, 1.0}, {0.5}, {}};
    CHECK_THROWS_AS(profile_payoffs(uniform_profile(2, Strategy::CP), table, tenth_costs(1.0)),
                    ContractViolation);
}

TEST_CASE("constant-payoff games make every profile an equilibrium") {
    // theta == phi and zero comm/global costs: flipping changes nothing
    const LossTable table{{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {}};
    const PayoffConfig cfg{1.0, CostModel{0.3, 0.0, 0.0, 0.0}};
    const auto equilibria = enumerate_nash(table, cfg);
    CHECK(equilibria.size() == 8);
    CHECK(equilibria.front() == uniform_profile(3, Strategy::CP)); // lexicographic order
    CHECK(equilibria.back() == uniform_profile(3, Strategy::DF));
}

TEST_CASE("free cooperation with real benefit keeps All-CP in the set") {
    const LossTable table{{1.0, 2.0}, {0.4, 0.9}, {}};
    const PayoffConfig cfg{1.0, CostModel{0.2, 0.0, 0.0, 0.0}}; // no comm/global costs
    const auto equilibria = enumerate_nash(table, cfg);
    bool has_all_cp = false;
    for (const auto& eq : equilibria) has_all_cp = has_all_cp || eq == uniform_profile(2, Strategy::CP);
    CHECK(has_all_cp);
}

TEST_CASE("All-DF is an equilibrium whenever comm and global costs are positive") {
    std::mt19937_64 rng(2025);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> size(1, 6);
        const std::size_t n = size(rng);
        const LossTable table = random_table(n, rng);
        PayoffConfig cfg = random_payoff(rng);
        cfg.costs.c_m = std::max(cfg.costs.c_m, 1e-6); // strictly positive sum
        const auto equilibria = enumerate_nash(table, cfg);
        bool has_all_df = false;
        for (const auto& eq : equilibria) has_all_df = has_all_df || eq == uniform_profile(n, Strategy::DF);
        CHECK(has_all_df);
    }
}

TEST_CASE("All-CP is an equilibrium exactly when nobody free-rides") {
    std::mt19937_64 rng(2026);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> size(2, 6);
        const std::size_t n = size(rng);
        const LossTable table = random_table(n, rng);
        const PayoffConfig cfg = random_payoff(rng);

        bool anyone_free_rides = false;
        for (std::size_t i = 0; i < n; ++i) anyone_free_rides |= free_rider_condition(i, table, cfg);

        const auto equilibria = enumerate_nash(table, cfg);
        bool has_all_cp = false;
        for (const auto& eq : equilibria) has_all_cp = has_all_cp || eq == uniform_profile(n, Strategy::CP);
        CHECK(has_all_cp == !anyone_free_rides);
    }
}

TEST_CASE("free rider condition substitutes directly") {
    const PayoffConfig cfg{1.0, CostModel{0.1, 0.1, 0.1, 0.1}}; // comm+global = 0.3
    CHECK(free_rider_condition(0, LossTable{{1.0}, {1.0}, {}}, cfg));        // no benefit, positive savings
    CHECK_FALSE(free_rider_condition(0, LossTable{{1.0}, {0.5}, {}}, cfg));  // 1*(2-1) = 1 >= 0.3
    const PayoffConfig huge_b{100.0, CostModel{0.1, 0.1, 0.1, 0.1}};
    CHECK_FALSE(free_rider_condition(0, LossTable{{2.0}, {0.2}, {}}, huge_b));
}

TEST_CASE("enumerate_nash matches the independent best-response oracle") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> size(1, 6);
        const std::size_t n = size(rng);
        const LossTable table = random_table(n, rng);
        const PayoffConfig cfg = random_payoff(rng);

        const auto got = enumerate_nash(table, cfg);
        const auto expected =
            oracle::nash_profiles(table.theta, table.phi, cfg.benefit, cfg.costs.c_plocal,
                                  cfg.costs.c_pglobal, cfg.costs.c_m, cfg.costs.c_m_prime);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);
    }
}

TEST_CASE("a 3-player hand-built table matches the oracle") {
    const LossTable table{{1.0, 0.8, 2.0}, {0.6, 0.7, 0.9}, {}};
    const PayoffConfig cfg{1.5, CostModel{0.2, 0.15, 0.1, 0.1}};
    const auto got = enumerate_nash(table, cfg);
    const auto expected = oracle::nash_profiles(table.theta, table.phi, cfg.benefit, 0.2, 0.15, 0.1, 0.1);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);
}

TEST_CASE("flipping a defector leaves settled cooperators' payoffs unchanged") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5;
        const LossTable table = random_table(n, rng);
        const PayoffConfig cfg = random_payoff(rng);
        StrategyProfile profile{Strategy::CP, Strategy::CP, Strategy::DF, Strategy::DF, Strategy::CP};
        auto before = profile_payoffs(profile, table, cfg);
        auto flipped_profile = profile;
        flipped_profile[3] = Strategy::CP; // 3 cooperators -> 4, both >= 2
        auto after = profile_payoffs(flipped_profile, table, cfg);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 3) continue;
            CHECK(before.payoffs[i] == after.payoffs[i]);
        }
    }
}

TEST_CASE("enumeration refuses oversized games") {
    LossTable table;
    table.theta.assign(21, 1.0);
    table.phi.assign(21, 0.5);
    CHECK_THROWS_WITH_AS(enumerate_nash(table, tenth_costs(1.0)), doctest::Contains("20"),
                         ContractViolation);
}

TEST_CASE("scaled phi interpolates between theta and the full-coalition gain") {
    LossTable table{{2.0, 4.0}, {}, {}};
    const auto phi = scaled_phi(table, 0.5);
    CHECK(phi(0, 1) == doctest::Approx(2.0));       // lone cooperator
    CHECK(phi(0, 2) == doctest::Approx(1.0));       // full gain at c = N
    CHECK(phi(1, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS(scaled_phi(table, 1.0), ContractViolation);
}
