#include <doctest.h>

#include <cmath>
#include <set>

#include "phonoloc/disorder.hpp"
#include "phonoloc/errors.hpp"
#include "phonoloc/sampling.hpp"

using namespace phonoloc;
using namespace phonoloc::disorder;

namespace {

chain::LocalModeParams local_of(std::size_t n) {
    chain::ChainParams p;
    p.n_ions = n;
    return chain::local_mode_params(p);
}

// Empirical first and second moments from K seeded draws.
struct Empirical {
    Eigen::VectorXd mean;
    Eigen::MatrixXd pair;
};

Empirical draw(const DisorderModel& model, std::size_t k, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(model.n_sites());
    Empirical e{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
    for (std::size_t i = 0; i < k; ++i) {
        const auto c = sample_realization(model, seed, i);
        Eigen::VectorXd s(n);
        for (Eigen::Index j = 0; j < n; ++j) s(j) = c.bits[std::size_t(j)];
        e.mean += s;
        e.pair += s * s.transpose();
    }
    e.mean /= double(k);
    e.pair /= double(k);
    return e;
}

// 3 sigma for the mean of a Bernoulli(q) over k draws
double bern3(double q, std::size_t k) { return 3.0 * std::sqrt(q * (1.0 - q) / double(k)); }

}  // namespace

TEST_CASE("ground-state preparation gives all zeros") {
    const auto model = DisorderModel::product(12, 0.0);
    for (std::uint64_t i = 0; i < 50; ++i) CHECK(sample_realization(model, 9, i).ones() == 0);
}

TEST_CASE("fair product: per-site and pair moments") {
    const std::size_t k = 100000;
    const auto model = DisorderModel::product(20, 0.5);
    const auto e = draw(model, k, 2024);
    for (Eigen::Index j = 0; j < 20; ++j) {
        CHECK(std::abs(e.mean(j) - 0.5) < bern3(0.5, k));
        for (Eigen::Index l = 0; l < 20; ++l) {
            const double want = j == l ? 0.5 : 0.25;
            CHECK(std::abs(e.pair(j, l) - want) < bern3(want, k));
        }
    }
}

TEST_CASE("dimer draws respect the pair constraint and moments") {
    const std::size_t k = 100000;
    const auto model = DisorderModel::dimer_bell(9);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const auto c = sample_realization(model, 4, i);
        for (std::size_t j = 0; j + 1 < 9; j += 2) CHECK(c.bits[j] == c.bits[j + 1]);
    }
    const auto e = draw(model, k, 77);
    for (Eigen::Index j = 0; j < 9; ++j) {
        for (Eigen::Index l = 0; l < 9; ++l) {
            const bool same_pair = j / 2 == l / 2 && j < 8 && l < 8;
            const double want = j == l || same_pair ? 0.5 : 0.25;
            CHECK(std::abs(e.pair(j, l) - want) < bern3(want, k));
        }
    }
}

TEST_CASE("analytic moments match enumeration") {
    for (const auto& model : {DisorderModel::product(std::vector<double>{0.1, 0.5, 0.9, 0.3}), DisorderModel::dimer_bell(5),
                              DisorderModel::clean(3, 1)}) {
        const auto configs = enumerate_realizations(model, 1024);
        const auto n = static_cast<Eigen::Index>(model.n_sites());
        Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n, n);
        for (const auto& c : configs) {
            Eigen::VectorXd s(n);
            for (Eigen::Index j = 0; j < n; ++j) s(j) = c.bits[std::size_t(j)];
            m1 += c.weight * s;
            m2 += c.weight * s * s.transpose();
        }
        CHECK((m1 - model.first_moments()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((m2 - model.second_moments()).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("enumeration of small supports") {
    const auto product = enumerate_realizations(DisorderModel::product(3, 0.5), 1024);
    REQUIRE(product.size() == 8);
    std::set<std::string> seen;
    for (const auto& c : product) {
        CHECK(c.weight == 0.125);
        seen.insert(c.to_string());
    }
    CHECK(seen.size() == 8);

    const auto dimer = enumerate_realizations(DisorderModel::dimer_bell(4), 1024);
    REQUIRE(dimer.size() == 4);
    std::set<std::string> pairs;
    for (const auto& c : dimer) {
        CHECK(c.weight == 0.25);
        pairs.insert(c.to_string());
    }
    CHECK(pairs == std::set<std::string>{"0000", "0011", "1100", "1111"});

    CHECK(enumerate_realizations(DisorderModel::dimer_bell(5), 1024).size() == 8);
    CHECK(*DisorderModel::dimer_bell(5).support_size() == 8);
    CHECK(*DisorderModel::product(10, 0.5).support_size() == 1024);
    CHECK(*DisorderModel::product(10, 0.0).support_size() == 1);
    CHECK(enumerate_realizations(DisorderModel::product(std::vector<double>{0.0, 1.0, 0.5}), 16).size() == 2);

    CHECK_THROWS_AS(enumerate_realizations(DisorderModel::product(11, 0.5), 1024), TooLarge);
    CHECK_FALSE(DisorderModel::product(80, 0.5).support_size().has_value());
}

TEST_CASE("enumerated weights sum to one") {
    for (const auto& model : {DisorderModel::product(std::vector<double>{0.2, 0.7, 0.5, 0.5, 0.1}),
                              DisorderModel::dimer_bell(7)}) {
        double total = 0.0;
        for (const auto& c : enumerate_realizations(model, 4096)) total += c.weight;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("explicit list passes through in order") {
    std::vector<SpinConfig> list{SpinConfig::parse("110", 0.5), SpinConfig::parse("001", 0.25),
                                 SpinConfig::parse("010", 0.25)};
    const auto model = DisorderModel::explicit_list(list);
    const auto out = enumerate_realizations(model, 8);
    REQUIRE(out.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(out[i].to_string() == list[i].to_string());
        CHECK(out[i].weight == list[i].weight);
    }
    CHECK_THROWS_AS(DisorderModel::explicit_list({SpinConfig::parse("1", 0.5)}), InvalidArgument);
    CHECK_THROWS_AS(DisorderModel::explicit_list({SpinConfig::parse("1", 0.5), SpinConfig::parse("00", 0.5)}),
                    InvalidArgument);
    CHECK_THROWS_AS(SpinConfig::parse("012", 1.0), InvalidArgument);
}

TEST_CASE("explicit sampling follows the weights") {
    const auto model = DisorderModel::explicit_list({SpinConfig::parse("10", 0.8), SpinConfig::parse("01", 0.2)});
    const std::size_t k = 20000;
    std::size_t first = 0;
    for (std::size_t i = 0; i < k; ++i) first += sample_realization(model, 3, i).to_string() == "10";
    CHECK(std::abs(double(first) / k - 0.8) < bern3(0.8, k));
}

TEST_CASE("explicit JSON document") {
    const auto doc = nlohmann::json::parse(R"({"configs": [{"bits": "0110", "weight": 0.75},
                                                           {"bits": "1111", "weight": 0.25}]})");
    const auto model = explicit_from_json(doc);
    CHECK(model.kind() == "explicit");
    CHECK(model.n_sites() == 4);
    CHECK(model.first_moments()(0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(explicit_from_json(nlohmann::json::parse(R"({"configs": [{"bits": "01", "weight": 0.5}]})")),
                    InvalidArgument);
    CHECK_THROWS_AS(explicit_from_json(nlohmann::json::parse(R"({"cfg": []})")), InvalidArgument);
}

TEST_CASE("sampling is a pure function of seed and index") {
    const auto model = DisorderModel::product(30, 0.5);
    for (std::uint64_t i : {0ULL, 1ULL, 17ULL, 123456789ULL}) {
        CHECK(sample_realization(model, 5, i).bits == sample_realization(model, 5, i).bits);
    }
    CHECK(sample_realization(model, 5, 0).bits != sample_realization(model, 5, 1).bits);
    CHECK(sample_realization(model, 5, 0).bits != sample_realization(model, 6, 0).bits);

    RngStream a(11, 3), b(11, 3);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("parallel reduction is independent of the worker count") {
    SamplingPlan plan;
    plan.n_samples = 203;
    plan.seed = 8;
    plan.enumeration_cap = 0;
    const auto model = DisorderModel::product(16, 0.5);
    const RealizationSource source(model, plan);
    auto reduce = [&](unsigned threads) {
        return reduce_realizations<ScalarMoments>(
            source, threads, [] { return ScalarMoments{}; },
            [](ScalarMoments& acc, const SpinConfig& c, std::size_t) { acc.add(std::sin(double(c.ones())) / 3.0, c.weight); },
            [](ScalarMoments& into, const ScalarMoments& from) { into.merge(from); });
    };
    const auto one = reduce(1);
    for (unsigned t : {2U, 3U, 8U}) {
        const auto many = reduce(t);
        CHECK(many.sum == one.sum);
        CHECK(many.sum_sq == one.sum_sq);
        CHECK(many.count == 203);
    }
}

TEST_CASE("exceptions inside workers reach the caller") {
    SamplingPlan plan;
    plan.n_samples = 100;
    plan.enumeration_cap = 0;
    const auto model = DisorderModel::product(4, 0.5);
    const RealizationSource source(model, plan);
    auto boom = [](ScalarMoments&, const SpinConfig&, std::size_t k) {
        if (k == 57) throw FitInvalid("boom");
    };
    CHECK_THROWS_AS(reduce_realizations<ScalarMoments>(
                        source, 3, [] { return ScalarMoments{}; }, boom,
                        [](ScalarMoments& a, const ScalarMoments& b) { a.merge(b); }),
                    FitInvalid);
}

TEST_CASE("realization source switches to enumeration under the cap") {
    SamplingPlan plan;
    plan.n_samples = 10;
    const auto small = DisorderModel::product(6, 0.5);
    const RealizationSource exact(small, plan);
    CHECK(exact.exact());
    CHECK(exact.size() == 64);
    plan.enumeration_cap = 0;
    const RealizationSource sampled(small, plan);
    CHECK_FALSE(sampled.exact());
    CHECK(sampled.size() == 10);
    CHECK(sampled.at(3).weight == doctest::Approx(0.1));
}

TEST_CASE("on-site energies") {
    auto local = local_of(2);
    CHECK(local.onsite(0) == doctest::Approx(0.95));
    const auto cfg = SpinConfig::parse("01", 1.0);
    const auto eps = onsite_energies(cfg, local, 0.01);
    CHECK(eps.eps(0) == doctest::Approx(0.96).epsilon(1e-15));
    CHECK(eps.eps(1) == doctest::Approx(0.94).epsilon(1e-15));

    const auto zero = onsite_energies(cfg, local, 0.0);
    CHECK(zero.eps == local.onsite);

    const auto big = local_of(25);
    const auto model = DisorderModel::product(25, 0.5);
    for (std::uint64_t i = 0; i < 40; ++i) {
        const auto c = sample_realization(model, 1, i);
        const auto e = onsite_energies(c, big, 0.3);
        for (Eigen::Index j = 0; j < 25; ++j) {
            const double shift = e.eps(j) - big.onsite(j);
            CHECK(std::abs(std::abs(shift) - 0.3) < 1e-14);
            CHECK((shift > 0) == (c.bits[std::size_t(j)] == 0));
        }
    }
    CHECK_THROWS_AS(onsite_energies(SpinConfig::parse("010", 1.0), local, 0.1), InvalidArgument);
}
