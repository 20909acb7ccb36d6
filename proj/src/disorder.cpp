#include "phonoloc/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "phonoloc/errors.hpp"

namespace phonoloc::disorder {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("site probability outside [0, 1]");
}

}  // namespace

std::size_t SpinConfig::ones() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::string SpinConfig::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

SpinConfig SpinConfig::parse(const std::string& text, double weight) {
    SpinConfig c;
    c.weight = weight;
    c.bits.reserve(text.size());
    for (char ch : text) {
        if (ch != '0' && ch != '1') throw InvalidArgument("spin configuration must contain only '0' and '1'");
        c.bits.push_back(ch == '1');
    }
    return c;
}

DisorderModel DisorderModel::product(std::size_t n, double p) {
    return product(std::vector<double>(n, p));
}

DisorderModel DisorderModel::product(std::vector<double> p) {
    if (p.empty()) throw InvalidArgument("product model needs at least one site");
    for (double x : p) check_probability(x);
    return DisorderModel(Product{std::move(p)});
}

DisorderModel DisorderModel::dimer_bell(std::size_t n) {
    if (n == 0) throw InvalidArgument("dimer model needs at least one site");
    return DisorderModel(DimerBell{n});
}

DisorderModel DisorderModel::explicit_list(std::vector<SpinConfig> configs) {
    if (configs.empty()) throw InvalidArgument("explicit model needs at least one configuration");
    const std::size_t n = configs.front().size();
    if (n == 0) throw InvalidArgument("explicit configurations must be non-empty");
    double total = 0.0;
    for (const auto& c : configs) {
        if (c.size() != n) throw InvalidArgument("explicit configurations differ in length");
        if (!(c.weight > 0.0 && c.weight <= 1.0)) throw InvalidArgument("explicit weight outside (0, 1]");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "explicit weights sum to " << total << ", expected 1";
        throw InvalidArgument(msg.str());
    }
    return DisorderModel(Explicit{std::move(configs)});
}

DisorderModel DisorderModel::clean(std::size_t n, std::uint8_t value) {
    if (n == 0) throw InvalidArgument("clean model needs at least one site");
    if (value > 1) throw InvalidArgument("clean spin value must be 0 or 1");
    return DisorderModel(Clean{n, value});
}

std::size_t DisorderModel::n_sites() const {
    return std::visit(overloaded{
                          [](const Product& m) { return m.p.size(); },
                          [](const DimerBell& m) { return m.n_sites; },
                          [](const Explicit& m) { return m.configs.front().size(); },
                          [](const Clean& m) { return m.n_sites; },
                      },
                      law_);
}

std::string DisorderModel::kind() const {
    return std::visit(overloaded{
                          [](const Product&) { return std::string("product"); },
                          [](const DimerBell&) { return std::string("dimer"); },
                          [](const Explicit&) { return std::string("explicit"); },
                          [](const Clean&) { return std::string("clean"); },
                      },
                      law_);
}

std::optional<std::uint64_t> DisorderModel::support_size() const {
    auto pow2 = [](std::size_t k) -> std::optional<std::uint64_t> {
        if (k >= 64) return std::nullopt;
        return std::uint64_t{1} << k;
    };
    return std::visit(overloaded{
                          [&](const Product& m) {
                              std::size_t free = 0;
                              for (double p : m.p) free += (p > 0.0 && p < 1.0);
                              return pow2(free);
                          },
                          [&](const DimerBell& m) { return pow2((m.n_sites + 1) / 2); },
                          [](const Explicit& m) { return std::optional<std::uint64_t>(m.configs.size()); },
                          [](const Clean&) { return std::optional<std::uint64_t>(1); },
                      },
                      law_);
}

Eigen::VectorXd DisorderModel::first_moments() const {
    const auto n = static_cast<Eigen::Index>(n_sites());
    return std::visit(overloaded{
                          [&](const Product& m) {
                              return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.p.data(), n));
                          },
                          [&](const DimerBell&) { return Eigen::VectorXd(Eigen::VectorXd::Constant(n, 0.5)); },
                          [&](const Explicit& m) {
                              Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
                              for (const auto& c : m.configs) {
                                  for (Eigen::Index j = 0; j < n; ++j) mean(j) += c.weight * c.bits[j];
                              }
                              return mean;
                          },
                          [&](const Clean& m) {
                              return Eigen::VectorXd(Eigen::VectorXd::Constant(n, static_cast<double>(m.value)));
                          },
                      },
                      law_);
}

Eigen::MatrixXd DisorderModel::second_moments() const {
    const auto n = static_cast<Eigen::Index>(n_sites());
    return std::visit(overloaded{
                          [&](const Product& m) {
                              const Eigen::Map<const Eigen::VectorXd> p(m.p.data(), n);
                              Eigen::MatrixXd out = p * p.transpose();
                              out.diagonal() = p;
                              return out;
                          },
                          [&](const DimerBell&) {
                              Eigen::MatrixXd out = Eigen::MatrixXd::Constant(n, n, 0.25);
                              for (Eigen::Index j = 0; j < n; ++j) {
                                  out(j, j) = 0.5;
                                  const Eigen::Index partner = (j % 2 == 0) ? j + 1 : j - 1;
                                  if (partner < n) out(j, partner) = 0.5;
                              }
                              return out;
                          },
                          [&](const Explicit& m) {
                              Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
                              for (const auto& c : m.configs) {
                                  Eigen::VectorXd s(n);
                                  for (Eigen::Index j = 0; j < n; ++j) s(j) = c.bits[j];
                                  out += c.weight * s * s.transpose();
                              }
                              return out;
                          },
                          [&](const Clean& m) {
                              return Eigen::MatrixXd(Eigen::MatrixXd::Constant(n, n, static_cast<double>(m.value)));
                          },
                      },
                      law_);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x70686e6cU};
    engine_.seed(seq);
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

SpinConfig sample_realization(const DisorderModel& model, RngStream& rng) {
    const std::size_t n = model.n_sites();
    return std::visit(overloaded{
                          [&](const Product& m) {
                              SpinConfig c;
                              c.bits.resize(n);
                              for (std::size_t j = 0; j < n; ++j) c.bits[j] = rng.uniform() < m.p[j];
                              return c;
                          },
                          [&](const DimerBell&) {
                              SpinConfig c;
                              c.bits.resize(n);
                              for (std::size_t j = 0; j < n; j += 2) {
                                  const std::uint8_t s = rng.uniform() < 0.5;
                                  c.bits[j] = s;
                                  if (j + 1 < n) c.bits[j + 1] = s;
                              }
                              return c;
                          },
                          [&](const Explicit& m) {
                              const double u = rng.uniform();
                              double acc = 0.0;
                              for (const auto& cfg : m.configs) {
                                  acc += cfg.weight;
                                  if (u < acc) return SpinConfig{cfg.bits, 1.0};
                              }
                              return SpinConfig{m.configs.back().bits, 1.0};
                          },
                          [&](const Clean& m) { return SpinConfig{Bits(n, m.value), 1.0}; },
                      },
                      model.variant());
}

SpinConfig sample_realization(const DisorderModel& model, std::uint64_t seed, std::uint64_t index) {
    RngStream rng(seed, index);
    return sample_realization(model, rng);
}

std::vector<SpinConfig> enumerate_realizations(const DisorderModel& model, std::size_t max_dim) {
    const auto support = model.support_size();
    if (!support || *support > max_dim) {
        throw TooLarge("disorder support exceeds enumeration cap of " + std::to_string(max_dim));
    }
    const std::size_t n = model.n_sites();
    return std::visit(
        overloaded{
            [&](const Product& m) {
                std::vector<std::size_t> free;
                Bits base(n, 0);
                for (std::size_t j = 0; j < n; ++j) {
                    if (m.p[j] > 0.0 && m.p[j] < 1.0) {
                        free.push_back(j);
                    } else {
                        base[j] = m.p[j] >= 1.0;
                    }
                }
                std::vector<SpinConfig> out;
                out.reserve(*support);
                for (std::uint64_t mask = 0; mask < *support; ++mask) {
                    SpinConfig c{base, 1.0};
                    for (std::size_t b = 0; b < free.size(); ++b) {
                        const std::size_t j = free[b];
                        // Most significant bit on the lowest free site keeps lexicographic order.
                        const bool one = (mask >> (free.size() - 1 - b)) & 1U;
                        c.bits[j] = one;
                        c.weight *= one ? m.p[j] : 1.0 - m.p[j];
                    }
                    out.push_back(std::move(c));
                }
                return out;
            },
            [&](const DimerBell&) {
                const std::size_t pairs = (n + 1) / 2;
                const double w = 1.0 / static_cast<double>(*support);
                std::vector<SpinConfig> out;
                out.reserve(*support);
                for (std::uint64_t mask = 0; mask < *support; ++mask) {
                    SpinConfig c{Bits(n, 0), w};
                    for (std::size_t k = 0; k < pairs; ++k) {
                        const std::uint8_t s = (mask >> (pairs - 1 - k)) & 1U;
                        c.bits[2 * k] = s;
                        if (2 * k + 1 < n) c.bits[2 * k + 1] = s;
                    }
                    out.push_back(std::move(c));
                }
                return out;
            },
            [](const Explicit& m) { return m.configs; },
            [&](const Clean& m) { return std::vector<SpinConfig>{SpinConfig{Bits(n, m.value), 1.0}}; },
        },
        model.variant());
}

OnsiteEnergies onsite_energies(const SpinConfig& config, const chain::LocalModeParams& local, double U) {
    if (!std::isfinite(U)) throw InvalidArgument("U must be finite");
    if (config.size() != local.size()) throw InvalidArgument("spin configuration does not match the chain size");
    OnsiteEnergies out{local.onsite};
    for (std::size_t j = 0; j < config.size(); ++j) out.eps(j) += config.bits[j] ? -U : U;
    return out;
}

DisorderModel explicit_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("configs") || !doc.at("configs").is_array()) {
        throw InvalidArgument("explicit disorder document needs a \"configs\" array");
    }
    std::vector<SpinConfig> configs;
    for (const auto& entry : doc.at("configs")) {
        if (!entry.is_object() || !entry.contains("bits") || !entry.contains("weight")) {
            throw InvalidArgument("each explicit configuration needs \"bits\" and \"weight\"");
        }
        configs.push_back(SpinConfig::parse(entry.at("bits").get<std::string>(), entry.at("weight").get<double>()));
    }
    return DisorderModel::explicit_list(std::move(configs));
}

DisorderModel load_explicit(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open disorder file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed disorder file " + path.string() + ": " + e.what());
    }
    return explicit_from_json(doc);
}

}  // namespace phonoloc::disorder
