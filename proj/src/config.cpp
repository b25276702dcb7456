#include "hpa/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hpa/errors.hpp"

namespace hpa::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

double to_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("config: " + key + ": not a number: " + s);
    return v;
}

template <class Int>
Int to_int(const std::string& key, const std::string& s) {
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("config: " + key + ": not an integer: " + s);
    return v;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt_axis(const numerics::AxisSpec& a) {
    return fmt(a.min) + " " + fmt(a.max) + " " + std::to_string(a.count);
}

numerics::AxisSpec parse_axis(const std::string& key, const std::string& s) {
    const auto w = words(s);
    if (w.size() != 3) throw InputError("config: " + key + ": expected `min max count`");
    return {to_double(key, w[0]), to_double(key, w[1]), to_int<int>(key, w[2])};
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define HPA_DOUBLE(sec, name, expr)                                                                      \
    Field {                                                                                              \
        sec, name, [](RunConfig& c, const std::string& v) { c.expr = to_double(name, v); },             \
            [](const RunConfig& c) { return fmt(c.expr); }                                               \
    }
#define HPA_INT(sec, name, expr)                                                                         \
    Field {                                                                                              \
        sec, name, [](RunConfig& c, const std::string& v) { c.expr = to_int<int>(name, v); },           \
            [](const RunConfig& c) { return std::to_string(c.expr); }                                    \
    }
#define HPA_AXIS(sec, name, expr)                                                                        \
    Field {                                                                                              \
        sec, name, [](RunConfig& c, const std::string& v) { c.expr = parse_axis(name, v); },            \
            [](const RunConfig& c) { return fmt_axis(c.expr); }                                          \
    }

const std::vector<Field>& run_fields() {
    static const std::vector<Field> fields = {
        {"run", "output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
         [](const RunConfig& c) { return c.output_dir.string(); }},
        {"run", "seed", [](RunConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        HPA_DOUBLE("run", "step", step),
        HPA_DOUBLE("run", "transient", transient),
        HPA_INT("jacobian", "samples", jacobian_samples),
        HPA_DOUBLE("jacobian", "tau", jacobian_tau),
        HPA_AXIS("jacobian", "grid_re", jacobian_grid.re),
        HPA_AXIS("jacobian", "grid_im", jacobian_grid.im),
        HPA_INT("floquet", "n", n_floquet),
        HPA_DOUBLE("floquet", "c", floquet_c),
        HPA_AXIS("floquet", "grid_re", floquet_grid.re),
        HPA_AXIS("floquet", "grid_im", floquet_grid.im),
        HPA_INT("koopman", "d", embedding.d),
        HPA_INT("koopman", "n_init", embedding.n_init),
        HPA_DOUBLE("koopman", "box_x_min", embedding.box.x_min),
        HPA_DOUBLE("koopman", "box_x_max", embedding.box.x_max),
        HPA_DOUBLE("koopman", "box_y_min", embedding.box.y_min),
        HPA_DOUBLE("koopman", "box_y_max", embedding.box.y_max),
        HPA_INT("koopman", "dictionary_size", dictionary_size),
        HPA_DOUBLE("koopman", "rank_tol", rank_tol),
        HPA_DOUBLE("koopman", "c", koopman_c),
        HPA_AXIS("koopman", "grid_re", koopman_grid.re),
        HPA_AXIS("koopman", "grid_im", koopman_grid.im),
        HPA_INT("kreiss", "radial", kreiss_radial),
        HPA_INT("kreiss", "angular", kreiss_angular),
        {"sweep", "h_values",
         [](RunConfig& c, const std::string& v) {
             c.h_values.clear();
             for (const auto& w : words(v)) c.h_values.push_back(to_double("h_values", w));
         },
         [](const RunConfig& c) {
             std::string s;
             for (double h : c.h_values) s += (s.empty() ? "" : " ") + fmt(h);
             return s;
         }},
    };
    return fields;
}

const std::vector<Field>& nondim_fields() {
    static const std::vector<Field> fields = {
        HPA_DOUBLE("nondimensional", "c1", nondimensional->c1),
        HPA_DOUBLE("nondimensional", "c2", nondimensional->c2),
        HPA_DOUBLE("nondimensional", "c3", nondimensional->c3),
        HPA_DOUBLE("nondimensional", "h", nondimensional->h),
        HPA_INT("nondimensional", "m1", nondimensional->m1),
        HPA_INT("nondimensional", "m2", nondimensional->m2),
        HPA_DOUBLE("nondimensional", "t1", nondimensional->t1),
        HPA_DOUBLE("nondimensional", "t2", nondimensional->t2),
    };
    return fields;
}

const std::vector<Field>& dim_fields() {
    static const std::vector<Field> fields = {
        HPA_DOUBLE("dimensional", "e_a", dimensional->e_a),
        HPA_DOUBLE("dimensional", "e_c", dimensional->e_c),
        HPA_INT("dimensional", "m1", dimensional->m1),
        HPA_INT("dimensional", "m2", dimensional->m2),
        HPA_DOUBLE("dimensional", "a", dimensional->a),
        HPA_DOUBLE("dimensional", "c", dimensional->c),
        HPA_DOUBLE("dimensional", "h", dimensional->h),
        HPA_DOUBLE("dimensional", "beta", dimensional->beta),
        HPA_DOUBLE("dimensional", "tau1", dimensional->tau1),
        HPA_DOUBLE("dimensional", "tau2", dimensional->tau2),
    };
    return fields;
}

#undef HPA_DOUBLE
#undef HPA_INT
#undef HPA_AXIS

}  // namespace

void RunConfig::validate() const {
    if (dimensional.has_value() == nondimensional.has_value())
        throw InputError("config: exactly one of [dimensional] and [nondimensional] must be given");
    if (dimensional) dimensional->validate();
    params().validate();
    if (!(step > 0)) throw InputError("config: step must be positive");
    if (!(transient >= 0)) throw InputError("config: transient must be nonnegative");
    if (jacobian_samples < 16) throw InputError("config: jacobian samples must be >= 16");
    if (n_floquet < 8) throw InputError("config: floquet n must be >= 8");
    if (dictionary_size < 1) throw InputError("config: dictionary_size must be >= 1");
    if (!(rank_tol > 0 && rank_tol < 1)) throw InputError("config: rank_tol must lie in (0, 1)");
    if (!(floquet_c > 0) || !(koopman_c > 0)) throw InputError("config: Kreiss c must be positive");
    if (kreiss_radial < 16 || kreiss_angular < 16) throw InputError("config: Kreiss grids need >= 16 points");
    if (output_dir.empty()) throw InputError("config: output_dir must not be empty");
    for (const auto* axes : {&jacobian_grid, &floquet_grid, &koopman_grid}) {
        axes->re.samples();
        axes->im.samples();
    }
    auto emb = embedding;
    emb.delta_tau = 1.0;
    emb.validate();
}

dde::NondimParams RunConfig::params() const {
    dde::NondimParams p = dimensional ? dde::nondimensionalize(*dimensional) : *nondimensional;
    if (h_override) p.h = *h_override;
    return p;
}

dde::LimitCycleOptions RunConfig::cycle_options() const {
    dde::LimitCycleOptions o;
    o.step = step;
    o.transient = transient;
    return o;
}

koopman::PipelineOptions RunConfig::pipeline_options() const {
    koopman::PipelineOptions o;
    o.embedding = embedding;
    o.embedding.seed = seed;
    o.embedding.step = step;
    o.dictionary_size = dictionary_size;
    o.cycle = cycle_options();
    return o;
}

numerics::KreissSearch RunConfig::kreiss_search() const {
    numerics::KreissSearch s;
    s.radial = kreiss_radial;
    s.angular = kreiss_angular;
    return s;
}

RunConfig parse(const std::string& text) {
    RunConfig cfg;
    cfg.nondimensional.reset();
    std::map<std::pair<std::string, std::string>, const Field*> table;
    for (const auto* list : {&run_fields(), &nondim_fields(), &dim_fields()})
        for (const auto& f : *list) table[{f.section, f.key}] = &f;
    const std::set<std::string> sections = {"run", "nondimensional", "dimensional", "jacobian",
                                            "floquet", "koopman", "kreiss", "sweep"};

    std::istringstream in(text);
    std::string line;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw InputError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!sections.count(section)) throw InputError(where + "unknown section [" + section + "]");
            if (section == "nondimensional" && !cfg.nondimensional) cfg.nondimensional = dde::NondimParams{};
            if (section == "dimensional" && !cfg.dimensional) cfg.dimensional = dde::DimensionalParams{};
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where + "expected key = value");
        if (section.empty()) throw InputError(where + "key outside of a section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert({section, key}).second) throw InputError(where + "duplicate key " + key);
        if (section == "run" && key == "h_override") {
            cfg.h_override = to_double(key, value);
            continue;
        }
        const auto it = table.find({section, key});
        if (it == table.end()) throw InputError(where + "unknown key " + key + " in [" + section + "]");
        it->second->set(cfg, value);
    }
    if (!cfg.dimensional && !cfg.nondimensional) cfg.nondimensional = dde::NondimParams{};
    cfg.validate();
    return cfg;
}

RunConfig load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot read config " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string serialize(const RunConfig& cfg) {
    std::ostringstream out;
    std::string section;
    auto emit = [&](const std::vector<Field>& fields) {
        for (const auto& f : fields) {
            if (f.section != section) {
                out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
                section = f.section;
                if (section == "run" && cfg.h_override) out << "h_override = " << fmt(*cfg.h_override) << '\n';
            }
            out << f.key << " = " << f.get(cfg) << '\n';
        }
    };
    emit(run_fields());
    if (cfg.dimensional) emit(dim_fields());
    if (cfg.nondimensional) emit(nondim_fields());
    return out.str();
}

std::string hash(const RunConfig& cfg) {
    // 64-bit FNV-1a of the canonical text.
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : serialize(cfg)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hpa::config
