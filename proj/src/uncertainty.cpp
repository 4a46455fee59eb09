#include "opf/uncertainty.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace opf {

using nlohmann::ordered_json;

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

// splitmix64: the per-draw counter-based generator underneath sampling.
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic uniform stream for one (seed, scenario, source) cell.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t scenario, std::uint64_t cell)
        : state_(mix(mix(mix(seed) ^ scenario) ^ (0x5851f42d4c957f2dULL * (cell + 1)))) {}

    double uniform() {  // (0, 1)
        state_ = mix(state_);
        const double u = static_cast<double>(state_ >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::pair<double, double> gaussian_pair() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

    // Beta(a, b) for integer shapes via sums of exponentials.
    double beta(int a, int b) {
        double ga = 0.0, gb = 0.0;
        for (int i = 0; i < a; ++i) ga -= std::log(uniform());
        for (int i = 0; i < b; ++i) gb -= std::log(uniform());
        return ga / (ga + gb);
    }

private:
    std::uint64_t state_;
};

std::complex<double> draw(const Support& sup, double p0, Stream& st) {
    switch (sup.kind) {
        case SupportKind::Point:
            return 0.0;
        case SupportKind::Box: {
            const double re = st.uniform(sup.re_lo, sup.re_hi);
            const double im = st.uniform(sup.im_lo, sup.im_hi);
            return {re, im};
        }
        case SupportKind::Gaussian: {
            const Eigen::LLT<Eigen::Matrix2d> llt(sup.cov);
            const auto [z1, z2] = st.gaussian_pair();
            const Eigen::Vector2d z =
                llt.matrixL() * Eigen::Vector2d(z1, z2);
            return {z(0), z(1)};
        }
        case SupportKind::BetaWind: {
            const double b = st.beta(sup.beta_a, sup.beta_b);
            return {-p0 + (sup.cap + p0) * b, 0.0};
        }
    }
    return 0.0;
}

Support parse_support(const ordered_json& j, const std::string& path, const PerUnitBase& base) {
    require(j.is_object(), path + ": expected an object");
    require(j.contains("kind"), path + ": missing 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    Support s;
    if (kind == "point") {
        s.kind = SupportKind::Point;
        for (const auto& [key, v] : j.items()) {
            (void)v;
            require(key == "kind", path + ": unknown field '" + key + "'");
        }
    } else if (kind == "box") {
        s.kind = SupportKind::Box;
        for (const auto& [key, v] : j.items()) {
            (void)v;
            require(key == "kind" || key == "re_mw" || key == "im_mvar",
                    path + ": unknown field '" + key + "'");
        }
        require(j.contains("re_mw"), path + ": box needs 're_mw'");
        const auto& re = j.at("re_mw");
        require(re.is_array() && re.size() == 2, path + ".re_mw: expected [lo, hi]");
        s.re_lo = base.power_to_pu(re[0].get<double>());
        s.re_hi = base.power_to_pu(re[1].get<double>());
        if (j.contains("im_mvar")) {
            const auto& im = j.at("im_mvar");
            require(im.is_array() && im.size() == 2, path + ".im_mvar: expected [lo, hi]");
            s.im_lo = base.power_to_pu(im[0].get<double>());
            s.im_hi = base.power_to_pu(im[1].get<double>());
        }
        require(s.re_lo <= s.re_hi && s.im_lo <= s.im_hi, path + ": box bounds out of order");
    } else if (kind == "gaussian") {
        s.kind = SupportKind::Gaussian;
        for (const auto& [key, v] : j.items()) {
            (void)v;
            require(key == "kind" || key == "cov_mva2", path + ": unknown field '" + key + "'");
        }
        require(j.contains("cov_mva2"), path + ": gaussian needs 'cov_mva2'");
        const auto& c = j.at("cov_mva2");
        require(c.is_array() && c.size() == 2 && c[0].is_array() && c[0].size() == 2 &&
                    c[1].is_array() && c[1].size() == 2,
                path + ".cov_mva2: expected a 2x2 matrix");
        const double s2 = base.mva * base.mva;
        s.cov << c[0][0].get<double>() / s2, c[0][1].get<double>() / s2,
            c[1][0].get<double>() / s2, c[1][1].get<double>() / s2;
        require(std::abs(s.cov(0, 1) - s.cov(1, 0)) < 1e-15, path + ": covariance not symmetric");
        Eigen::LLT<Eigen::Matrix2d> llt(s.cov + 1e-300 * Eigen::Matrix2d::Identity());
        require(llt.info() == Eigen::Success, path + ": covariance not positive semidefinite");
    } else if (kind == "beta_wind") {
        s.kind = SupportKind::BetaWind;
        for (const auto& [key, v] : j.items()) {
            (void)v;
            require(key == "kind" || key == "cap_mw" || key == "a" || key == "b",
                    path + ": unknown field '" + key + "'");
        }
        require(j.contains("cap_mw"), path + ": beta_wind needs 'cap_mw'");
        s.cap = base.power_to_pu(j.at("cap_mw").get<double>());
        if (j.contains("a")) s.beta_a = j.at("a").get<int>();
        if (j.contains("b")) s.beta_b = j.at("b").get<int>();
        require(s.beta_a >= 1 && s.beta_a <= 20 && s.beta_b >= 1 && s.beta_b <= 20,
                path + ": beta shapes must be integers in [1, 20]");
    } else {
        throw ValidationError(path + ": unknown support kind '" + kind + "'");
    }
    return s;
}

}  // namespace

void UncertaintyModel::finalize() {
    p_r0_ = Eigen::VectorXd::Zero(n_);
    q_r0_ = Eigen::VectorXd::Zero(n_);
    for (const RenewableSource& r : renewables_) {
        p_r0_(r.bus) += r.p0;
        q_r0_(r.bus) += r.q0;
    }
}

UncertaintyModel UncertaintyModel::point_mass(const Network& net) {
    UncertaintyModel m;
    m.n_ = net.num_buses();
    m.finalize();
    return m;
}

UncertaintyModel UncertaintyModel::parse(const std::string& text, const Network& net) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("model document is not valid JSON: ") + e.what());
    }
    require(doc.is_object(), "model: expected an object");
    for (const auto& [key, v] : doc.items()) {
        (void)v;
        require(key == "renewables" || key == "loads",
                "model: unknown field '" + key + "'");
    }

    UncertaintyModel m;
    m.n_ = net.num_buses();
    const PerUnitBase& base = net.base();

    if (doc.contains("renewables")) {
        const auto& arr = doc.at("renewables");
        require(arr.is_array(), "model.renewables: expected an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "model.renewables[" + std::to_string(i) + "]";
            const auto& j = arr[i];
            require(j.is_object(), path + ": expected an object");
            for (const auto& [key, v] : j.items()) {
                (void)v;
                require(key == "bus" || key == "p0_mw" || key == "q0_mvar" || key == "support",
                        path + ": unknown field '" + key + "'");
            }
            RenewableSource r;
            require(j.contains("bus"), path + ": missing 'bus'");
            r.bus = j.at("bus").get<int>();
            require(r.bus >= 0 && r.bus < m.n_, path + ": bus out of range");
            const Bus& bus = net.buses()[r.bus];
            require(bus.renewable, path + ": bus " + std::to_string(r.bus) +
                                       " is not flagged renewable in the case");
            if (j.contains("p0_mw")) r.p0 = base.power_to_pu(j.at("p0_mw").get<double>());
            if (j.contains("q0_mvar")) r.q0 = base.power_to_pu(j.at("q0_mvar").get<double>());
            if (j.contains("support")) {
                r.support = parse_support(j.at("support"), path + ".support", base);
            }
            m.renewables_.push_back(r);
        }
    }
    if (doc.contains("loads")) {
        const auto& arr = doc.at("loads");
        require(arr.is_array(), "model.loads: expected an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "model.loads[" + std::to_string(i) + "]";
            const auto& j = arr[i];
            require(j.is_object(), path + ": expected an object");
            for (const auto& [key, v] : j.items()) {
                (void)v;
                require(key == "bus" || key == "support", path + ": unknown field '" + key + "'");
            }
            LoadFluctuation l;
            require(j.contains("bus"), path + ": missing 'bus'");
            l.bus = j.at("bus").get<int>();
            require(l.bus >= 0 && l.bus < m.n_, path + ": bus out of range");
            require(j.contains("support"), path + ": missing 'support'");
            l.support = parse_support(j.at("support"), path + ".support", base);
            m.loads_.push_back(l);
        }
    }
    m.finalize();
    return m;
}

UncertaintyModel UncertaintyModel::load(const std::filesystem::path& path, const Network& net) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), net);
}

bool UncertaintyModel::has_unbounded_support() const {
    for (const auto& r : renewables_) {
        if (!r.support.is_bounded()) return true;
    }
    for (const auto& l : loads_) {
        if (!l.support.is_bounded()) return true;
    }
    return false;
}

bool UncertaintyModel::is_tail_draw(const UncertaintyVector& delta) const {
    auto outside = [](const Support& s, std::complex<double> v) {
        if (s.kind != SupportKind::Gaussian) return false;
        const double s_re = 3.0 * std::sqrt(std::max(0.0, s.cov(0, 0)));
        const double s_im = 3.0 * std::sqrt(std::max(0.0, s.cov(1, 1)));
        return std::abs(v.real()) > s_re || std::abs(v.imag()) > s_im;
    };
    for (const LoadFluctuation& l : loads_) {
        if (outside(l.support, delta.load_delta(l.bus))) return true;
    }
    for (const RenewableSource& r : renewables_) {
        if (outside(r.support, delta.renew_delta(r.bus))) return true;
    }
    return false;
}

UncertaintyModel UncertaintyModel::scaled(double factor) const {
    UncertaintyModel m = *this;
    auto scale = [&](Support& s) {
        s.re_lo *= factor;
        s.re_hi *= factor;
        s.im_lo *= factor;
        s.im_hi *= factor;
        s.cov *= factor * factor;
        s.cap *= factor;
    };
    for (auto& r : m.renewables_) scale(r.support);
    for (auto& l : m.loads_) scale(l.support);
    return m;
}

std::uint64_t UncertaintyModel::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 0x100000001b3ULL;
    };
    feed(static_cast<double>(n_));
    for (const auto& r : renewables_) {
        feed(r.bus);
        feed(r.p0);
        feed(r.q0);
        feed(static_cast<double>(r.support.kind));
        feed(r.support.re_lo);
        feed(r.support.re_hi);
        feed(r.support.im_lo);
        feed(r.support.im_hi);
        feed(r.support.cap);
        feed(r.support.cov.sum());
    }
    for (const auto& l : loads_) {
        feed(l.bus);
        feed(static_cast<double>(l.support.kind));
        feed(l.support.re_lo);
        feed(l.support.re_hi);
        feed(l.support.im_lo);
        feed(l.support.im_hi);
        feed(l.support.cov.sum());
    }
    return h;
}

ScenarioSet sample(const UncertaintyModel& model, int count, std::uint64_t seed) {
    if (count < 1) throw ValidationError("sample: count must be >= 1");
    ScenarioSet set;
    set.seed = seed;
    set.model_hash = model.content_hash();
    set.scenarios.reserve(count);
    const int n = model.num_buses();
    for (int i = 0; i < count; ++i) {
        UncertaintyVector d;
        d.seed = seed;
        d.index = i;
        d.load_delta = Eigen::VectorXcd::Zero(n);
        d.renew_delta = Eigen::VectorXcd::Zero(n);
        // cell ids: loads first, then renewables, in model order
        std::uint64_t cell = 0;
        for (const LoadFluctuation& l : model.loads()) {
            Stream st(seed, static_cast<std::uint64_t>(i), cell++);
            d.load_delta(l.bus) += draw(l.support, 0.0, st);
        }
        for (const RenewableSource& r : model.renewables()) {
            Stream st(seed, static_cast<std::uint64_t>(i), cell++);
            d.renew_delta(r.bus) += draw(r.support, r.p0, st);
        }
        set.scenarios.push_back(std::move(d));
    }
    return set;
}

double mismatch(const UncertaintyVector& delta) {
    return delta.load_delta.real().sum() - delta.renew_delta.real().sum();
}

DeploymentVector DeploymentVector::uniform(int n_g) {
    DeploymentVector d;
    d.alpha = Eigen::VectorXd::Constant(n_g, 1.0 / n_g);
    return d;
}

DeploymentVector DeploymentVector::checked(Eigen::VectorXd alpha) {
    if (alpha.size() < 1) throw ValidationError("deployment vector must be nonempty");
    if (alpha.minCoeff() < 0.0) throw ValidationError("deployment vector must be nonnegative");
    if (std::abs(alpha.sum() - 1.0) > 1e-12) {
        throw ValidationError("deployment vector must sum to 1 (got " +
                              std::to_string(alpha.sum()) + ")");
    }
    DeploymentVector d;
    d.alpha = std::move(alpha);
    return d;
}

Eigen::VectorXd deploy(const Eigen::VectorXd& p_gen, const DeploymentVector& alpha,
                       const UncertaintyVector& delta) {
    if (p_gen.size() != alpha.alpha.size()) throw ValidationError("deploy: dimension mismatch");
    return p_gen + alpha.alpha * mismatch(delta);
}

void save_scenarios(std::ostream& os, const ScenarioSet& set) {
    ordered_json header;
    header["kind"] = "scenario-set";
    header["seed"] = set.seed;
    header["count"] = set.size();
    header["model_hash"] = set.model_hash;
    if (set.eps) header["eps"] = *set.eps;
    if (set.beta) header["beta"] = *set.beta;
    os << header.dump() << "\n";
    for (const UncertaintyVector& d : set.scenarios) {
        ordered_json line;
        line["i"] = d.index;
        auto pack = [](const Eigen::VectorXcd& v) {
            ordered_json arr = ordered_json::array();
            for (int k = 0; k < v.size(); ++k) {
                arr.push_back({v(k).real(), v(k).imag()});
            }
            return arr;
        };
        line["load"] = pack(d.load_delta);
        line["renew"] = pack(d.renew_delta);
        os << line.dump() << "\n";
    }
}

ScenarioSet load_scenarios(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("scenario file is empty");
    ordered_json header;
    try {
        header = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("scenario header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || header.value("kind", "") != "scenario-set") {
        throw ValidationError("scenario file header must declare kind 'scenario-set'");
    }
    ScenarioSet set;
    set.seed = header.at("seed").get<std::uint64_t>();
    set.model_hash = header.value("model_hash", 0ULL);
    if (header.contains("eps")) set.eps = header.at("eps").get<double>();
    if (header.contains("beta")) set.beta = header.at("beta").get<double>();
    const int count = header.at("count").get<int>();
    auto unpack = [](const ordered_json& arr) {
        Eigen::VectorXcd v(arr.size());
        for (size_t k = 0; k < arr.size(); ++k) {
            v(static_cast<int>(k)) = {arr[k][0].get<double>(), arr[k][1].get<double>()};
        }
        return v;
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const ordered_json j = ordered_json::parse(line);
        UncertaintyVector d;
        d.seed = set.seed;
        d.index = j.at("i").get<int>();
        d.load_delta = unpack(j.at("load"));
        d.renew_delta = unpack(j.at("renew"));
        set.scenarios.push_back(std::move(d));
    }
    if (set.size() != count) {
        throw ValidationError("scenario file truncated: header declares " +
                              std::to_string(count) + " scenarios, found " +
                              std::to_string(set.size()));
    }
    return set;
}

}  // namespace opf
