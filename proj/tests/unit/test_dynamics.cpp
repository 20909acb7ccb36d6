#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "phonoloc/dynamics.hpp"
#include "phonoloc/errors.hpp"
#include "phonoloc/linalg.hpp"

using namespace phonoloc;
using namespace phonoloc::dynamics;
using disorder::DisorderModel;

namespace {

chain::LocalModeParams local_of(std::size_t n, double beta = 0.05) {
    chain::ChainParams p;
    p.n_ions = n;
    p.beta = beta;
    return chain::local_mode_params(p);
}

// Classical RK4 on i dpsi/dt = (H - c) psi; the constant c only removes the
// fast global phase, restored at the end.
Eigen::VectorXcd rk4(const Eigen::MatrixXd& h, std::size_t source, double t_final, double dt) {
    const auto n = h.rows();
    const double c = h.diagonal().mean();
    const Eigen::MatrixXcd a = std::complex<double>(0, -1) * (h - c * Eigen::MatrixXd::Identity(n, n)).cast<std::complex<double>>();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
    psi(Eigen::Index(source)) = 1.0;
    const auto steps = static_cast<long>(std::llround(t_final / dt));
    const double h_step = t_final / double(steps);
    for (long s = 0; s < steps; ++s) {
        const Eigen::VectorXcd k1 = a * psi;
        const Eigen::VectorXcd k2 = a * (psi + 0.5 * h_step * k1);
        const Eigen::VectorXcd k3 = a * (psi + 0.5 * h_step * k2);
        const Eigen::VectorXcd k4 = a * (psi + h_step * k3);
        psi += h_step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return psi * std::polar(1.0, -c * t_final);
}

SinglePhononHamiltonian disordered(std::size_t n, double U_over_t, std::uint64_t index) {
    const auto local = local_of(n);
    const auto model = DisorderModel::product(n, 0.5);
    const auto cfg = disorder::sample_realization(model, 99, index);
    return build_hamiltonian(disorder::onsite_energies(cfg, local, U_over_t * local.t), local);
}

DensityProfile exponential_profile(std::size_t n, std::size_t c, double xi) {
    DensityProfile p;
    p.values.resize(Eigen::Index(n));
    for (std::size_t j = 0; j < n; ++j) p.values(Eigen::Index(j)) = std::exp(-std::abs(double(j) - double(c)) / xi);
    p.values /= p.values.sum();
    p.std_error = Eigen::VectorXd::Zero(Eigen::Index(n));
    return p;
}

}  // namespace

TEST_CASE("Hamiltonian assembly") {
    const auto one = local_of(1);
    const auto h1 = build_hamiltonian({Eigen::VectorXd::Constant(1, 0.7)}, one);
    CHECK(h1.matrix.rows() == 1);
    CHECK(h1.matrix(0, 0) == 0.7);

    const auto two = local_of(2);
    Eigen::VectorXd eps(2);
    eps << 0.96, 0.94;
    const auto h2 = build_hamiltonian({eps}, two).matrix;
    CHECK(h2(0, 0) == 0.96);
    CHECK(h2(1, 1) == 0.94);
    CHECK(h2(0, 1) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(h2(1, 0) == h2(0, 1));

    CHECK_THROWS_AS(build_hamiltonian({Eigen::VectorXd::Zero(3)}, two), InvalidArgument);
}

TEST_CASE("initial state sits on the source") {
    const auto h = disordered(12, 0.75, 0);
    const double t0[] = {0.0};
    const auto p = evolve_single_phonon(h, 5, t0).front();
    for (Eigen::Index j = 0; j < 12; ++j) CHECK(p.values(j) == doctest::Approx(j == 5 ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("two-site Rabi oscillation") {
    const double tau = 0.05;
    SinglePhononHamiltonian h{Eigen::MatrixXd(2, 2)};
    h.matrix << 0.9, tau, tau, 0.9;
    std::vector<double> times{0.0, 3.0, 10.0, 31.4, 100.0, 777.0};
    const auto ps = evolve_single_phonon(h, 0, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double s = std::sin(tau * times[i]);
        CHECK(ps[i].values(1) == doctest::Approx(s * s).epsilon(1e-12));
    }
}

TEST_CASE("eigen propagator against RK4 integration") {
    for (std::uint64_t r = 0; r < 2; ++r) {
        const auto h = disordered(20, 0.75, r);
        const double t_final[] = {1000.0};
        const auto psi = evolve_amplitudes(h, 10, t_final).front();
        const auto ref = rk4(h.matrix, 10, 1000.0, 0.05);
        CHECK((psi - ref).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("clean chain spreads ballistically") {
    const auto local = local_of(50);
    SinglePhononHamiltonian h{chain::phonon_hamiltonian(local)};
    std::vector<double> times{20.0, 40.0, 80.0, 160.0};
    const auto ps = evolve_single_phonon(h, center_site(50), times);
    const double rate = spatial_variance(ps[0]) / (times[0] * times[0]);
    for (std::size_t i = 1; i < times.size(); ++i) {
        CHECK(spatial_variance(ps[i]) / (times[i] * times[i]) == doctest::Approx(rate).epsilon(0.01));
    }
}

TEST_CASE("norm and energy conservation") {
    std::vector<double> times{0.0, 1.0, 50.0, 1e3, 2e4, 1e5};
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto h = disordered(30, 0.75, r);
        const auto amps = evolve_amplitudes(h, 15, times);
        const double e0 = h.matrix(15, 15);
        for (const auto& psi : amps) {
            CHECK(std::abs(psi.squaredNorm() - 1.0) < 1e-9);
            const double e = (psi.adjoint() * h.matrix.cast<std::complex<double>>() * psi)(0).real();
            CHECK(std::abs(e - e0) < 1e-9);
        }
    }
}

TEST_CASE("clean model average equals a single evolution") {
    const auto local = local_of(16);
    SamplingPlan plan;
    const auto avg = average_density(DisorderModel::clean(16), local, 0.03, 8, 500.0, plan);
    const double t[] = {500.0};
    const auto eps = disorder::onsite_energies(disorder::SpinConfig{disorder::Bits(16, 0), 1.0}, local, 0.03);
    const auto one = evolve_single_phonon(build_hamiltonian(eps, local), 8, t).front();
    CHECK((avg.values - one.values).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(avg.exact);
    CHECK(avg.std_error.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Monte Carlo average agrees with enumeration at N=8") {
    const auto local = local_of(8);
    const auto model = DisorderModel::product(8, 0.5);
    SamplingPlan exact_plan;
    const auto exact = average_density(model, local, 0.75 * local.t, 4, 2e4, exact_plan);
    REQUIRE(exact.exact);
    CHECK(exact.n_samples == 256);

    SamplingPlan mc;
    mc.n_samples = 10000;
    mc.seed = 42;
    mc.enumeration_cap = 0;
    const auto sampled = average_density(model, local, 0.75 * local.t, 4, 2e4, mc);
    REQUIRE_FALSE(sampled.exact);
    for (Eigen::Index j = 0; j < 8; ++j) {
        CAPTURE(j);
        CHECK(std::abs(sampled.values(j) - exact.values(j)) <= 3.0 * sampled.std_error(j));
    }
    CHECK(std::abs(exact.total() - 1.0) < 1e-9);
    CHECK(std::abs(sampled.total() - 1.0) < 1e-9);
}

TEST_CASE("averaged profile is mirror symmetric about a central source") {
    const std::size_t n = 41;
    const auto local = local_of(n);
    SamplingPlan plan;
    plan.n_samples = 400;
    plan.seed = 3;
    const auto p = average_density(DisorderModel::product(n, 0.5), local, 0.75 * local.t, 20, 2e4, plan);
    for (std::size_t d = 1; d <= 20; ++d) {
        const auto a = Eigen::Index(20 - d), b = Eigen::Index(20 + d);
        const double sigma = std::hypot(p.std_error(a), p.std_error(b));
        CHECK(std::abs(p.values(a) - p.values(b)) <= 3.0 * sigma);
    }
}

TEST_CASE("average is identical for any worker count") {
    const auto local = local_of(20);
    const auto model = DisorderModel::dimer_bell(20);
    SamplingPlan plan;
    plan.n_samples = 77;
    plan.seed = 5;
    plan.enumeration_cap = 0;
    const auto one = average_density(model, local, 0.5 * local.t, 10, 1e3, plan);
    plan.threads = 4;
    const auto four = average_density(model, local, 0.5 * local.t, 10, 1e3, plan);
    CHECK(one.values == four.values);
    CHECK(one.std_error == four.std_error);
}

TEST_CASE("fit recovers an exact exponential") {
    const auto p = exponential_profile(61, 30, 7.0);
    const auto fit = fit_localization_length(p, 30);
    REQUIRE(fit.valid);
    CHECK(fit.xi == doctest::Approx(7.0).epsilon(0.01 / 7.0));
    CHECK(fit.value() == fit.xi);
    CHECK(fit.r_squared > 0.999999);

    FitOptions window;
    window.window = FitWindow{2, 12};
    const auto w = fit_localization_length(p, 30, window);
    CHECK(w.valid);
    CHECK(w.n_points == 11);
    CHECK(w.xi == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("fit uses both tails for an off-center source") {
    const auto p = exponential_profile(40, 12, 4.0);
    const auto fit = fit_localization_length(p, 12);
    REQUIRE(fit.valid);
    CHECK(fit.xi == doctest::Approx(4.0).epsilon(1e-6));
    const auto tail = tail_profile(p, 12);
    CHECK(tail.size() == 28);
    CHECK(tail[3] == doctest::Approx(p.values(9)));
    CHECK(tail[20] == p.values(32));
}

TEST_CASE("clean long-time profile has no exponential tail") {
    const auto local = local_of(50);
    SinglePhononHamiltonian h{chain::phonon_hamiltonian(local)};
    const double t[] = {2e4};
    const auto p = evolve_single_phonon(h, 25, t).front();
    const auto fit = fit_localization_length(p, 25);
    CHECK_FALSE(fit.valid);
    CHECK_THROWS_AS(fit.value(), FitInvalid);
}

TEST_CASE("fit windows with too few points or zeros") {
    const auto p = exponential_profile(21, 10, 3.0);
    FitOptions tiny;
    tiny.window = FitWindow{1, 3};
    const auto f = fit_localization_length(p, 10, tiny);
    CHECK_FALSE(f.valid);
    CHECK_THROWS_AS(f.value(), FitInvalid);

    auto holes = p;
    holes.values(10 + 6) = holes.values(10 - 6) = 0.0;
    FitOptions wide;
    wide.window = FitWindow{1, 10};
    const auto s = fit_localization_length(holes, 10, wide);
    CHECK(s.window_shrunk);
    CHECK(s.fit_window.max_distance == 5);
    CHECK(s.valid);
}

TEST_CASE("localization length shrinks as disorder grows") {
    const std::size_t n = 50;
    const auto local = local_of(n);
    SamplingPlan plan;
    plan.n_samples = 200;
    plan.seed = 17;
    double previous = 1e9;
    for (double u : {0.25, 0.75, 2.0}) {
        const auto p = average_density(DisorderModel::product(n, 0.5), local, u * local.t, 25, 2e4, plan);
        const auto fit = fit_localization_length(p, 25);
        CAPTURE(u);
        CAPTURE(fit.r_squared);
        REQUIRE(fit.slope < 0.0);
        CHECK(fit.xi < previous);
        previous = fit.xi;
    }
}

TEST_CASE("participation ratio") {
    CHECK(participation_ratio(Eigen::VectorXd::Constant(16, 0.25)) == doctest::Approx(16.0));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(9);
    e(4) = 1.0;
    CHECK(participation_ratio(e) == 1.0);
}

namespace {

double top_band_pr(std::size_t n, double U_over_t, std::size_t realizations) {
    const auto local = local_of(n);
    const auto model = DisorderModel::product(n, 0.5);
    const auto keep = static_cast<Eigen::Index>(std::ceil(0.1 * double(n)));
    double total = 0.0;
    for (std::size_t r = 0; r < realizations; ++r) {
        const auto cfg = disorder::sample_realization(model, 2, r);
        const auto h = build_hamiltonian(disorder::onsite_energies(cfg, local, U_over_t * local.t), local);
        const auto eig = linalg::symmetric_eigensystem(h.matrix);
        for (Eigen::Index k = 0; k < keep; ++k) total += participation_ratio(eig.vectors.col(k));
    }
    return total / double(realizations * std::size_t(keep));
}

}  // namespace

TEST_CASE("top-band participation: clean grows with N, binary alloy decelerates") {
    const std::vector<std::size_t> sizes{25, 50, 100, 200};
    std::vector<double> clean, rba;
    for (auto n : sizes) {
        clean.push_back(top_band_pr(n, 0.0, 1));
        rba.push_back(top_band_pr(n, 0.25, 100));
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        CAPTURE(i);
        CHECK(clean[i] / clean[i - 1] > 1.8);
        CHECK(rba[i] / rba[i - 1] < clean[i] / clean[i - 1]);
        if (i > 1) CHECK(rba[i] / rba[i - 1] < rba[i - 1] / rba[i - 2]);
    }
    CHECK(rba.back() / rba.front() < 0.5 * clean.back() / clean.front());
}
