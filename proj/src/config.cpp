#include "lrdyn/config.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "json.hpp"

using nlohmann::json;

namespace lrdyn
{

std::string to_string(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::simulate:
        return "simulate";
    case ExperimentKind::selfconsistent:
        return "selfconsistent";
    case ExperimentKind::lrbound:
        return "lrbound";
    case ExperimentKind::converge:
        return "converge";
    case ExperimentKind::mixture:
        return "mixture";
    case ExperimentKind::density:
        return "density";
    }
    return "?";
}

namespace
{
    std::string join(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

    std::string at_index(const std::string& path, std::size_t i)
    {
        return path + "[" + std::to_string(i) + "]";
    }

    void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys)
    {
        if (!j.is_object())
            throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, _] : j.items())
            if (!allowed.count(k))
                throw ConfigError(join(path, k), "unknown field");
    }

    const json& required(const json& j, const std::string& path, const std::string& key)
    {
        if (!j.contains(key))
            throw ConfigError(join(path, key), "missing");
        return j.at(key);
    }

    double number(const json& v, const std::string& path)
    {
        if (!v.is_number())
            throw ConfigError(path, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x))
            throw ConfigError(path, "must be finite");
        return x;
    }

    double number_or(const json& j, const std::string& path, const std::string& key, double fallback)
    {
        return j.contains(key) ? number(j.at(key), join(path, key)) : fallback;
    }

    long long integer(const json& v, const std::string& path, long long lo, long long hi)
    {
        if (!v.is_number_integer())
            throw ConfigError(path, "must be an integer");
        const long long x = v.get<long long>();
        if (x < lo || x > hi)
            throw ConfigError(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return x;
    }

    long long integer_or(const json& j, const std::string& path, const std::string& key, long long lo, long long hi,
                         long long fallback)
    {
        return j.contains(key) ? integer(j.at(key), join(path, key), lo, hi) : fallback;
    }

    std::string text(const json& v, const std::string& path)
    {
        if (!v.is_string())
            throw ConfigError(path, "must be a string");
        return v.get<std::string>();
    }

    cplx complex_value(const json& v, const std::string& path)
    {
        if (v.is_number())
            return {number(v, path), 0.0};
        if (v.is_array() && v.size() == 2)
            return {number(v[0], at_index(path, 0)), number(v[1], at_index(path, 1))};
        throw ConfigError(path, "must be a number or a [re, im] pair");
    }

    // base64 of little-endian doubles, (re, im) per entry, row-major for matrices
    std::vector<cplx> base64_entries(const std::string& text, const std::string& path)
    {
        using namespace boost::archive::iterators;
        static_assert(std::endian::native == std::endian::little, "base64 payloads are little-endian");
        using decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
        std::string s;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c)))
                s.push_back(c);
        std::size_t pad = 0;
        while (!s.empty() && s.back() == '=')
        {
            s.pop_back();
            ++pad;
        }
        if (pad > 2 || (s.size() + pad) % 4 != 0)
            throw ConfigError(path, "malformed base64");
        std::string bytes;
        try
        {
            // decode whole quads: padding becomes zero bits, the extra bytes are dropped
            s.append(pad, 'A');
            bytes.assign(decoder(s.begin()), decoder(s.end()));
            bytes.resize(bytes.size() - pad);
        }
        catch (const std::exception&)
        {
            throw ConfigError(path, "malformed base64");
        }
        if (bytes.size() % 16 != 0 || bytes.empty())
            throw ConfigError(path, "base64 payload must hold complex doubles (16 bytes each)");
        std::vector<cplx> out(bytes.size() / 16);
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            double re, im;
            std::memcpy(&re, bytes.data() + 16 * i, 8);
            std::memcpy(&im, bytes.data() + 16 * i + 8, 8);
            if (!std::isfinite(re) || !std::isfinite(im))
                throw ConfigError(path, "entry " + std::to_string(i) + " is not finite");
            out[i] = {re, im};
        }
        return out;
    }

    Vec vector_value(const json& v, const std::string& path)
    {
        if (v.is_string())
        {
            const auto e = base64_entries(v.get<std::string>(), path);
            return Eigen::Map<const Vec>(e.data(), static_cast<Eigen::Index>(e.size()));
        }
        if (!v.is_array() || v.empty())
            throw ConfigError(path, "must be a non-empty array or a base64 string");
        Vec out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i)
            out(static_cast<Eigen::Index>(i)) = complex_value(v[i], at_index(path, i));
        return out;
    }

    Mat matrix_value(const json& v, const std::string& path)
    {
        if (v.is_string())
        {
            const auto e = base64_entries(v.get<std::string>(), path);
            const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(e.size()))));
            if (static_cast<std::size_t>(n * n) != e.size())
                throw ConfigError(path, "base64 matrix must have a square number of entries");
            Mat out(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    out(i, j) = e[static_cast<std::size_t>(i * n + j)];
            return out;
        }
        if (!v.is_array() || v.empty())
            throw ConfigError(path, "must be a non-empty array of rows or a base64 string");
        const auto n = static_cast<Eigen::Index>(v.size());
        Mat out(n, n);
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            const std::string row = at_index(path, i);
            if (!v[i].is_array() || v[i].size() != v.size())
                throw ConfigError(row, "must have " + std::to_string(v.size()) + " entries");
            for (std::size_t j = 0; j < v[i].size(); ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    complex_value(v[i][j], at_index(row, j));
        }
        return out;
    }

    Site site_value(const json& v, const std::string& path, int d)
    {
        if (!v.is_array() || static_cast<int>(v.size()) != d)
            throw ConfigError(path, "must be an array of " + std::to_string(d) + " integers");
        Site x;
        for (std::size_t i = 0; i < v.size(); ++i)
            x.push_back(static_cast<int>(integer(v[i], at_index(path, i), -1000, 1000)));
        return x;
    }

    PeriodVector period_value(const json& j, const std::string& path, int d)
    {
        if (!j.contains("period"))
            return PeriodVector::ones(d);
        const json& v = j.at("period");
        const std::string p = join(path, "period");
        if (!v.is_array() || static_cast<int>(v.size()) != d)
            throw ConfigError(p, "must be an array of " + std::to_string(d) + " integers");
        std::vector<int> l;
        for (std::size_t i = 0; i < v.size(); ++i)
            l.push_back(static_cast<int>(integer(v[i], at_index(p, i), 1, 8)));
        return PeriodVector(l);
    }

    // ---- model

    Interaction term_value(const json& j, const std::string& path, int d, int nspin)
    {
        const std::string family = text(required(j, path, "family"), join(path, "family"));
        auto need_spinful = [&] {
            if (nspin != 2)
                throw ConfigError(join(path, "family"), family + " needs spins = 2");
        };
        if (family == "onsite" || family == "number")
        {
            only_keys(j, path, {"family", "coeff"});
            return onsite_number(d, nspin, complex_value(j.value("coeff", json(1.0)), join(path, "coeff")));
        }
        if (family == "hopping")
        {
            only_keys(j, path, {"family", "t"});
            return nn_hopping(d, nspin, number(required(j, path, "t"), join(path, "t")));
        }
        if (family == "nn_density")
        {
            only_keys(j, path, {"family", "v"});
            return nn_density(d, nspin, number(required(j, path, "v"), join(path, "v")));
        }
        if (family == "hubbard")
        {
            only_keys(j, path, {"family", "u"});
            need_spinful();
            return onsite_hubbard(d, complex_value(required(j, path, "u"), join(path, "u")));
        }
        if (family == "pairing_creation" || family == "pairing_annihilation")
        {
            only_keys(j, path, {"family"});
            need_spinful();
            return family == "pairing_creation" ? pairing_creation(d) : pairing_annihilation(d);
        }
        if (family == "custom")
        {
            only_keys(j, path, {"family", "sites", "matrix"});
            const json& sites = required(j, path, "sites");
            const std::string sp = join(path, "sites");
            if (!sites.is_array() || sites.empty())
                throw ConfigError(sp, "must be a non-empty array of sites");
            SiteSet z;
            for (std::size_t i = 0; i < sites.size(); ++i)
                z.push_back(site_value(sites[i], at_index(sp, i), d));
            z = normalize_set(z);
            const Mat m = matrix_value(required(j, path, "matrix"), join(path, "matrix"));
            const std::size_t modes = z.size() * static_cast<std::size_t>(nspin);
            if (modes > 10 || m.rows() != (Eigen::Index{1} << modes))
                throw ConfigError(join(path, "matrix"), "must be 2^modes square for the listed sites (at most 10 modes)");
            try
            {
                return custom_interaction(d, nspin, z, m);
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError(join(path, "matrix"), e.what());
            }
        }
        throw ConfigError(join(path, "family"), "unknown family '" + family + "'");
    }

    Interaction interaction_value(const json& v, const std::string& path, int d, int nspin)
    {
        if (v.is_object())
            return term_value(v, path, d, nspin);
        if (!v.is_array())
            throw ConfigError(path, "must be a term or an array of terms");
        Interaction phi(d, nspin, true);
        for (std::size_t i = 0; i < v.size(); ++i)
            phi = phi + term_value(v[i], at_index(path, i), d, nspin);
        return phi;
    }

    Schedule schedule_value(const json& j, const std::string& path)
    {
        const std::string kind = text(required(j, path, "kind"), join(path, "kind"));
        if (kind == "constant")
        {
            only_keys(j, path, {"kind", "value"});
            return Schedule::constant(number_or(j, path, "value", 1.0));
        }
        if (kind == "linear")
        {
            only_keys(j, path, {"kind", "start", "slope"});
            return Schedule::linear(number_or(j, path, "start", 1.0), number_or(j, path, "slope", 0.0));
        }
        if (kind == "sinusoidal")
        {
            only_keys(j, path, {"kind", "offset", "amplitude", "omega"});
            return Schedule::sinusoidal(number_or(j, path, "offset", 1.0), number_or(j, path, "amplitude", 0.0),
                                        number_or(j, path, "omega", 1.0));
        }
        throw ConfigError(join(path, "kind"), "unknown schedule kind '" + kind + "'");
    }

    DecayFunction decay_value(const json& j, const std::string& path)
    {
        only_keys(j, path, {"family", "parameter"});
        const std::string family = j.contains("family") ? text(j.at("family"), join(path, "family")) : "exponential";
        const double p = number_or(j, path, "parameter", family == "exponential" ? 1.0 : 3.0);
        if (!(p > 0.0))
            throw ConfigError(join(path, "parameter"), "must be positive");
        if (family == "exponential")
            return DecayFunction::exponential(p);
        if (family == "polynomial")
            return DecayFunction::polynomial(p);
        throw ConfigError(join(path, "family"), "unknown decay family '" + family + "'");
    }

    TimeDependentModel model_value(const json& j, const std::string& path, std::string& label)
    {
        only_keys(j, path, {"dimension", "spins", "decay", "bcs", "phi", "atoms", "schedule"});
        const int d = static_cast<int>(integer(required(j, path, "dimension"), join(path, "dimension"), 1, 3));
        const int nspin = static_cast<int>(integer_or(j, path, "spins", 1, 2, 1));
        const DecayFunction F =
            j.contains("decay") ? decay_value(j.at("decay"), join(path, "decay")) : DecayFunction::exponential(1.0);

        LongRangeModel m{Interaction(d, nspin, true), {}, F};
        if (j.contains("bcs"))
        {
            const std::string bp = join(path, "bcs");
            if (j.contains("phi") || j.contains("atoms"))
                throw ConfigError(bp, "cannot be combined with phi or atoms");
            if (nspin != 2)
                throw ConfigError(join(path, "spins"), "the bcs model needs spins = 2");
            const json& b = j.at("bcs");
            only_keys(b, bp, {"gamma", "mu", "hopping"});
            const double gamma = number_or(b, bp, "gamma", 1.0);
            const double mu = number_or(b, bp, "mu", 0.0);
            const double hop = number_or(b, bp, "hopping", 0.0);
            m = build_bcs_model(d, gamma, mu, hop, F);
            std::ostringstream os;
            os << "bcs(gamma=" << gamma << ",mu=" << mu << ",hopping=" << hop << ")";
            label = os.str();
        }
        else
        {
            if (j.contains("phi"))
                m.phi = interaction_value(j.at("phi"), join(path, "phi"), d, nspin);
            if (j.contains("atoms"))
            {
                const json& atoms = j.at("atoms");
                const std::string ap = join(path, "atoms");
                if (!atoms.is_array())
                    throw ConfigError(ap, "must be an array");
                for (std::size_t k = 0; k < atoms.size(); ++k)
                {
                    const std::string p = at_index(ap, k);
                    only_keys(atoms[k], p, {"weight", "factors"});
                    const double w = number(required(atoms[k], p, "weight"), join(p, "weight"));
                    const json& fs = required(atoms[k], p, "factors");
                    const std::string fp = join(p, "factors");
                    if (!fs.is_array() || fs.empty())
                        throw ConfigError(fp, "must be a non-empty array");
                    std::vector<Interaction> raw;
                    for (std::size_t f = 0; f < fs.size(); ++f)
                    {
                        raw.push_back(interaction_value(fs[f], at_index(fp, f), d, nspin));
                        if (raw.back().empty())
                            throw ConfigError(at_index(fp, f), "factor is zero");
                    }
                    m.atoms.push_back(make_atom(w, raw, F));
                }
            }
            label = "custom(phi_terms=" + std::to_string(m.phi.terms().size()) +
                    ",atoms=" + std::to_string(m.atoms.size()) + ")";
        }
        if (!m.phi.is_self_adjoint())
            throw ConfigError(join(path, "phi"), "interaction is not self-adjoint");
        if (!model_selfadjoint_check(m))
            throw ConfigError(join(path, "atoms"), "atom list is not closed under reversal");

        TimeDependentModel tm(m);
        if (j.contains("schedule"))
        {
            const json& sc = j.at("schedule");
            const std::string sp = join(path, "schedule");
            only_keys(sc, sp, {"phi", "atoms"});
            if (sc.contains("phi"))
                tm.phi_schedule = schedule_value(sc.at("phi"), join(sp, "phi"));
            if (sc.contains("atoms"))
            {
                const json& as = sc.at("atoms");
                const std::string ap = join(sp, "atoms");
                if (!as.is_array() || as.size() != m.atoms.size())
                    throw ConfigError(ap, "needs one schedule per atom (" + std::to_string(m.atoms.size()) + ")");
                for (std::size_t k = 0; k < as.size(); ++k)
                    tm.atom_schedules.push_back(schedule_value(as[k], at_index(ap, k)));
            }
            if (!tm.autonomous())
                label += "+schedule";
        }
        return tm;
    }

    // ---- states

    ProductSpec parse_state(const json& j, const std::string& path, int d, int nspin, std::string& label);

    /// Builds the state on a single cell so bad cell data fails at parse time.
    ProductSpec single_state(const json& j, const std::string& path, int d, int nspin, std::string& label)
    {
        ProductSpec spec = parse_state(j, path, d, nspin, label);
        SiteSet cell;
        for (const auto& x : spec.l.cell_sites())
            cell.push_back(add(x, spec.offset));
        try
        {
            rebuild(spec, make_space(cell, nspin, d));
        }
        catch (const std::exception& e)
        {
            throw ConfigError(j.contains("cell") ? join(path, "cell") : path, e.what());
        }
        return spec;
    }

    ProductSpec parse_state(const json& j, const std::string& path, int d, int nspin, std::string& label)
    {
        const std::string kind = text(required(j, path, "kind"), join(path, "kind"));
        ProductSpec spec;
        spec.offset = origin(d);
        if (kind == "pairing")
        {
            only_keys(j, path, {"kind", "theta", "phase"});
            if (nspin != 2)
                throw ConfigError(join(path, "kind"), "pairing states need spins = 2");
            const double theta = number(required(j, path, "theta"), join(path, "theta"));
            const double phase = number_or(j, path, "phase", 0.0);
            spec.l = PeriodVector::ones(d);
            Vec v = Vec::Zero(4);
            v(0) = std::cos(theta);
            v(3) = std::sin(theta) * std::exp(I_UNIT * phase);
            spec.cell_vector = v;
            std::ostringstream os;
            os << "pairing(theta=" << theta << ",phase=" << phase << ")";
            label = os.str();
            return spec;
        }
        if (kind == "occupation")
        {
            only_keys(j, path, {"kind", "p", "period"});
            spec.l = period_value(j, path, d);
            const int modes = spec.l.volume() * nspin;
            if (modes > 10)
                throw ConfigError(join(path, "period"), "cell has more than 10 modes");
            std::vector<double> p;
            const json& pv = required(j, path, "p");
            const std::string pp = join(path, "p");
            if (pv.is_number())
                p.assign(modes, number(pv, pp));
            else if (pv.is_array() && static_cast<int>(pv.size()) == modes)
                for (std::size_t i = 0; i < pv.size(); ++i)
                    p.push_back(number(pv[i], at_index(pp, i)));
            else
                throw ConfigError(pp, "must be a number or one value per cell mode (" + std::to_string(modes) + ")");
            for (std::size_t i = 0; i < p.size(); ++i)
                if (p[i] < 0.0 || p[i] > 1.0)
                    throw ConfigError(pv.is_number() ? pp : at_index(pp, i), "must lie in [0, 1]");
            const Eigen::Index dim = Eigen::Index{1} << modes;
            Mat rho = Mat::Zero(dim, dim);
            for (Eigen::Index n = 0; n < dim; ++n)
            {
                double w = 1.0;
                for (int k = 0; k < modes; ++k)
                    w *= (n >> k) & 1 ? p[k] : 1.0 - p[k];
                rho(n, n) = w;
            }
            spec.cell_density = rho;
            label = "occupation";
            return spec;
        }
        if (kind == "vector" || kind == "density")
        {
            only_keys(j, path, {"kind", "period", "offset", "cell"});
            spec.l = period_value(j, path, d);
            if (j.contains("offset"))
                spec.offset = site_value(j.at("offset"), join(path, "offset"), d);
            const int modes = spec.l.volume() * nspin;
            if (modes > 10)
                throw ConfigError(join(path, "period"), "cell has more than 10 modes");
            const Eigen::Index dim = Eigen::Index{1} << modes;
            const std::string cp = join(path, "cell");
            if (kind == "vector")
            {
                Vec v = vector_value(required(j, path, "cell"), cp);
                if (v.size() != dim)
                    throw ConfigError(cp, "needs " + std::to_string(dim) + " entries");
                if (std::abs(v.norm() - 1.0) > 1e-12)
                    throw ConfigError(cp, "must have unit norm");
                spec.cell_vector = v;
            }
            else
            {
                Mat m = matrix_value(required(j, path, "cell"), cp);
                if (m.rows() != dim)
                    throw ConfigError(cp, "needs " + std::to_string(dim) + " rows");
                spec.cell_density = m;
            }
            label = kind;
            return spec;
        }
        throw ConfigError(join(path, "kind"), "unknown state kind '" + kind + "'");
    }

    LocalOperator named_operator(const json& j, const std::string& path, int d, int nspin, std::string& label)
    {
        if (j.is_string())
        {
            if (j.get<std::string>() == "identity")
            {
                label = "identity";
                return LocalOperator::scalar(1.0);
            }
            throw ConfigError(path, "unknown operator '" + j.get<std::string>() + "'");
        }
        if (!j.is_object())
            throw ConfigError(path, "must be \"identity\" or an object");
        if (j.contains("monomials"))
        {
            only_keys(j, path, {"monomials"});
            const json& ms = j.at("monomials");
            const std::string mp = join(path, "monomials");
            if (!ms.is_array() || ms.empty())
                throw ConfigError(mp, "must be a non-empty array");
            LocalOperator op;
            for (std::size_t i = 0; i < ms.size(); ++i)
            {
                const std::string p = at_index(mp, i);
                only_keys(ms[i], p, {"coeff", "factors"});
                Monomial mono;
                mono.coeff = ms[i].contains("coeff") ? complex_value(ms[i].at("coeff"), join(p, "coeff")) : 1.0;
                const json& fs = required(ms[i], p, "factors");
                if (!fs.is_array())
                    throw ConfigError(join(p, "factors"), "must be an array");
                for (std::size_t k = 0; k < fs.size(); ++k)
                {
                    const std::string fp = at_index(join(p, "factors"), k);
                    only_keys(fs[k], fp, {"site", "spin", "dagger"});
                    Factor f;
                    f.site = site_value(required(fs[k], fp, "site"), join(fp, "site"), d);
                    f.spin = static_cast<int>(integer_or(fs[k], fp, "spin", 0, nspin - 1, 0));
                    if (fs[k].contains("dagger"))
                    {
                        if (!fs[k].at("dagger").is_boolean())
                            throw ConfigError(join(fp, "dagger"), "must be a boolean");
                        f.dagger = fs[k].at("dagger").get<bool>();
                    }
                    mono.factors.push_back(f);
                }
                op.add_term(mono);
            }
            label = "custom";
            return op;
        }
        only_keys(j, path, {"name", "site", "spin"});
        const std::string name = text(required(j, path, "name"), join(path, "name"));
        const Site x = j.contains("site") ? site_value(j.at("site"), join(path, "site"), d) : origin(d);
        const int spin = static_cast<int>(integer_or(j, path, "spin", 0, nspin - 1, 0));
        label = name;
        if (name == "identity")
            return LocalOperator::scalar(1.0);
        if (name == "number")
            return LocalOperator::number(x, spin);
        if (name == "annihilator")
            return LocalOperator::annihilator(x, spin);
        if (name == "creator")
            return LocalOperator::creator(x, spin);
        if (name == "hopping")
        {
            Site y = x;
            y[0] += 1;
            return LocalOperator::creator(x, spin) * LocalOperator::annihilator(y, spin);
        }
        if (name == "pairing")
        {
            if (nspin != 2)
                throw ConfigError(join(path, "name"), "pairing needs spins = 2");
            return LocalOperator::annihilator(x, SPIN_DOWN) * LocalOperator::annihilator(x, SPIN_UP);
        }
        throw ConfigError(join(path, "name"), "unknown operator '" + name + "'");
    }

    ExperimentKind kind_value(const json& v, const std::string& path)
    {
        const std::string k = text(v, path);
        for (auto kind : {ExperimentKind::simulate, ExperimentKind::selfconsistent, ExperimentKind::lrbound,
                          ExperimentKind::converge, ExperimentKind::mixture, ExperimentKind::density})
            if (to_string(kind) == k)
                return kind;
        throw ConfigError(path, "unknown experiment '" + k + "'");
    }
} // namespace

ExperimentConfig parse_config(const std::string& source)
{
    json j;
    try
    {
        j = json::parse(source);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
    }
    only_keys(j, "", {"schema", "name", "experiment", "seed", "threads", "model", "state", "observables", "time",
                      "sweep", "box", "solver", "lrbound", "output"});
    if (j.contains("schema") && integer(j.at("schema"), "schema", 1, 1) != 1)
        throw ConfigError("schema", "unsupported version");

    ExperimentConfig c;
    c.kind = kind_value(required(j, "", "experiment"), "experiment");
    c.name = j.contains("name") ? text(j.at("name"), "name") : to_string(c.kind);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
        throw ConfigError("name", "must be a non-empty file-name safe string");
    if (j.contains("seed"))
    {
        if (!j.at("seed").is_number_unsigned())
            throw ConfigError("seed", "must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.threads = static_cast<int>(integer_or(j, "", "threads", 1, 256, 1));

    const bool needs_model = c.kind != ExperimentKind::lrbound;
    if (needs_model)
    {
        try
        {
            c.model = model_value(required(j, "", "model"), "model", c.model_label);
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError("model", e.what());
        }
    }
    else if (j.contains("model"))
        throw ConfigError("model", "lrbound draws its own models; remove this field");

    const int d = c.model ? c.model->base.dimension() : 1;
    const int nspin = c.model ? c.model->base.nspin() : 1;

    if (needs_model)
    {
        const json& st = required(j, "", "state");
        if (st.is_object() && st.contains("kind") && st.at("kind") == "mixture")
        {
            only_keys(st, "state", {"kind", "components"});
            const json& comps = required(st, "state", "components");
            if (!comps.is_array() || comps.empty())
                throw ConfigError("state.components", "must be a non-empty array");
            double total = 0.0;
            for (std::size_t i = 0; i < comps.size(); ++i)
            {
                const std::string p = at_index("state.components", i);
                only_keys(comps[i], p, {"weight", "state"});
                const double w = number(required(comps[i], p, "weight"), join(p, "weight"));
                if (!(w > 0.0))
                    throw ConfigError(join(p, "weight"), "must be positive");
                std::string label;
                c.components.push_back(single_state(required(comps[i], p, "state"), join(p, "state"), d, nspin, label));
                c.weights.push_back(w);
                c.state_label += (i ? "+" : "") + label;
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw ConfigError("state.components", "weights must sum to 1");
            c.state_label = "mixture(" + c.state_label + ")";
        }
        else
        {
            c.components.push_back(single_state(st, "state", d, nspin, c.state_label));
            c.weights.push_back(1.0);
        }
        if (c.kind != ExperimentKind::mixture && c.components.size() > 1)
            throw ConfigError("state.kind", "mixtures are only accepted by the mixture experiment");
    }

    if (j.contains("observables"))
    {
        const json& ob = j.at("observables");
        only_keys(ob, "observables", {"A", "B"});
        if (ob.contains("A"))
            c.a = named_operator(ob.at("A"), "observables.A", d, nspin, c.a_label);
        if (ob.contains("B"))
            c.b = named_operator(ob.at("B"), "observables.B", d, nspin, c.b_label);
    }

    if (j.contains("time"))
    {
        const json& tm = j.at("time");
        only_keys(tm, "time", {"s", "t", "steps", "record_every"});
        c.s = number_or(tm, "time", "s", 0.0);
        c.t = number_or(tm, "time", "t", 1.0);
        c.steps = static_cast<int>(integer_or(tm, "time", "steps", 0, 10'000'000, 0));
        c.record_every = static_cast<int>(integer_or(tm, "time", "record_every", 1, 10'000'000, 1));
        if (std::abs(c.t - c.s) > 1e3)
            throw ConfigError("time.t", "|t - s| exceeds 1000");
    }

    if (j.contains("sweep"))
    {
        const json& sw = j.at("sweep");
        if (!sw.is_array() || sw.empty())
            throw ConfigError("sweep", "must be a non-empty array of radii");
        c.sweep.clear();
        for (std::size_t i = 0; i < sw.size(); ++i)
            c.sweep.push_back(static_cast<int>(integer(sw[i], at_index("sweep", i), 0, 64)));
    }
    c.box = static_cast<int>(integer_or(j, "", "box", -1, 64, -1));

    if (j.contains("solver"))
    {
        const json& sv = j.at("solver");
        only_keys(sv, "solver", {"tol", "max_iter", "damping", "window", "flow_step", "force_density"});
        c.solver.tol = number_or(sv, "solver", "tol", c.solver.tol);
        if (!(c.solver.tol > 0.0))
            throw ConfigError("solver.tol", "must be positive");
        c.solver.max_iter = static_cast<int>(integer_or(sv, "solver", "max_iter", 1, 10000, c.solver.max_iter));
        c.solver.damping = number_or(sv, "solver", "damping", c.solver.damping);
        if (!(c.solver.damping > 0.0 && c.solver.damping <= 1.0))
            throw ConfigError("solver.damping", "must lie in (0, 1]");
        c.solver.window = number_or(sv, "solver", "window", c.solver.window);
        if (!(c.solver.window > 0.0))
            throw ConfigError("solver.window", "must be positive");
        c.flow_step = number_or(sv, "solver", "flow_step", c.flow_step);
        if (!(c.flow_step > 0.0))
            throw ConfigError("solver.flow_step", "must be positive");
        if (sv.contains("force_density"))
        {
            if (!sv.at("force_density").is_boolean())
                throw ConfigError("solver.force_density", "must be a boolean");
            c.force_density = sv.at("force_density").get<bool>();
        }
    }

    if (j.contains("lrbound"))
    {
        const json& lb = j.at("lrbound");
        only_keys(lb, "lrbound", {"draws", "max_modes"});
        c.draws = static_cast<int>(integer_or(lb, "lrbound", "draws", 1, 100000, c.draws));
        c.max_modes = static_cast<int>(integer_or(lb, "lrbound", "max_modes", 2, PROPAGATOR_MODE_CAP, c.max_modes));
    }

    if (j.contains("output"))
    {
        const json& out = j.at("output");
        only_keys(out, "output", {"prefix"});
        if (out.contains("prefix"))
        {
            c.prefix = text(out.at("prefix"), "output.prefix");
            if (c.prefix.empty() || c.prefix.find_first_of("/\\") != std::string::npos)
                throw ConfigError("output.prefix", "must be a non-empty file-name safe string");
        }
    }
    if (c.prefix.empty())
        c.prefix = c.name;

    c.source = j.dump();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("<config>", "cannot read '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace
{
    std::vector<Preset> make_presets()
    {
        const std::string pi6 = "0.52359877559829882";
        const std::string pi3 = "1.0471975511965976";
        const std::string bcs = R"("model": {"dimension": 1, "spins": 2, "bcs": {"gamma": 1.0, "mu": 0.5}})";
        const std::string pairing = R"({"name": "pairing", "site": [0]})";
        return {
            {"smoke", "one-site BCS at t = s; checks the pipeline end to end", "< 1 s",
             R"({"name": "smoke", "experiment": "simulate", )" + bcs +
                 R"(, "state": {"kind": "pairing", "theta": )" + pi6 + R"(}, "observables": {"A": )" + pairing +
                 R"(}, "time": {"s": 0, "t": 0}, "sweep": [0]})"},
            {"bcs-converge", "full vs effective pairing dynamics of the 1D spinful BCS model, L = 0, 1, 2",
             "< 10 s",
             R"({"name": "bcs-converge", "experiment": "converge", )" + bcs +
                 R"(, "state": {"kind": "pairing", "theta": )" + pi6 + R"(}, "observables": {"A": )" + pairing +
                 R"(, "B": "identity"}, "time": {"s": 0, "t": 1}, "sweep": [0, 1, 2]})"},
            {"bcs-selfconsistent", "self-consistent pairing flow of the one-site BCS cell on [0, 2]", "< 5 s",
             R"({"name": "bcs-selfconsistent", "experiment": "selfconsistent", )" + bcs +
                 R"(, "state": {"kind": "pairing", "theta": )" + pi6 +
                 R"(}, "time": {"s": 0, "t": 2, "record_every": 10}, "box": 0, "solver": {"tol": 1e-10, "max_iter": 30, "window": 0.1, "flow_step": 0.001}})"},
            {"lr-sweep", "commutator bound on 100 random models and observables (boxes up to 9 modes)", "< 2 min",
             R"({"name": "lr-sweep", "experiment": "lrbound", "seed": 20240601, "lrbound": {"draws": 100, "max_modes": 9}})"},
            {"density-sweep",
             "energy density and ergodicity defect of a spinless product state with nearest-neighbour density interaction",
             "< 5 s",
             R"({"name": "density-sweep", "experiment": "density", "model": {"dimension": 1, "spins": 1, "phi": [{"family": "nn_density", "v": 1.0}]}, "state": {"kind": "occupation", "p": 0.3}, "observables": {"A": {"name": "number", "site": [0]}, "B": "identity"}, "sweep": [1, 2, 3, 4]})"},
            {"mixture-demo", "two-phase BCS mixture, per-fiber and mixed gaps for L = 0, 1, 2", "< 20 s",
             R"({"name": "mixture-demo", "experiment": "mixture", )" + bcs +
                 R"(, "state": {"kind": "mixture", "components": [{"weight": 0.5, "state": {"kind": "pairing", "theta": )" +
                 pi6 + R"(}}, {"weight": 0.5, "state": {"kind": "pairing", "theta": )" + pi3 +
                 R"(}}]}, "observables": {"A": )" + pairing + R"(, "B": "identity"}, "time": {"s": 0, "t": 1}, "sweep": [0, 1, 2]})"},
        };
    }
} // namespace

const std::vector<Preset>& presets()
{
    static const std::vector<Preset> all = make_presets();
    return all;
}

const Preset* find_preset(const std::string& name)
{
    for (const auto& p : presets())
        if (p.name == name)
            return &p;
    return nullptr;
}

} // namespace lrdyn
