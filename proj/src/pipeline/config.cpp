#include "modalsim/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "modalsim/error.hpp"

namespace modalsim::pipeline {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// section -> allowed keys; "*" marks a free-form section.
const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"mesh", {"node", "ele", "bar"}},
        {"material",
         {"young_modulus", "poisson_ratio", "density", "rayleigh_mass",
          "rayleigh_stiffness"}},
        {"anchors", {"ids", "plane", "axis", "coordinate", "tolerance", "take"}},
        {"constraints", {"ids", "plane", "axis", "coordinate", "tolerance", "take"}},
        {"modal", {"modes", "cache", "lanczos_seed"}},
        {"simulate",
         {"trajectory_csv", "substeps", "warp", "snap_constraints", "gravity", "format",
          "output_dir", "report", "reference_frame"}},
        {"tracking",
         {"images", "pattern", "raw", "frame_rate", "seeds", "patch_radius",
          "search_radius", "pyramid_levels", "min_confidence", "refresh_confidence",
          "output_csv", "first_index"}},
        {"calibration", {"mm_per_pixel", "plane", "axis1", "axis2", "origin_mm"}},
        {"calibration.midsagittal", {"mm_per_pixel", "axis1", "axis2", "origin_mm"}},
        {"calibration.coronal", {"mm_per_pixel", "axis1", "axis2", "origin_mm"}},
        {"fit",
         {"alpha", "beta", "gamma", "attraction", "max_iterations", "tolerance_mm",
          "semi_implicit", "output_node", "output_ele", "report"}},
        {"fit.midsagittal", {"contour", "coordinate", "tolerance"}},
        {"fit.coronal", {"contour", "coordinate", "tolerance"}},
        {"bench", {"warmup", "steps", "amplitude", "frequency", "report"}},
    };
    return table;
}

} // namespace

Config Config::parse_string(const std::string& text, const std::string& name) {
    Config config;
    config.source_name_ = name;

    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError(name + ":" + std::to_string(line_number) +
                                      ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ValidationError(name + ":" + std::to_string(line_number) +
                                      ": empty section name");
            config.sections_[section]; // section may stay empty
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(name + ":" + std::to_string(line_number) +
                                  ": expected 'key = value'");
        if (section.empty())
            throw ValidationError(name + ":" + std::to_string(line_number) +
                                  ": key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ValidationError(name + ":" + std::to_string(line_number) + ": empty key");
        auto& entry = config.sections_[section][key];
        entry.value = value;
        entry.line = line_number;
    }
    return config;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

bool Config::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

bool Config::has_key(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::optional<std::string> Config::get_string(const std::string& section,
                                              const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end())
        return std::nullopt;
    const auto kit = it->second.find(key);
    if (kit == it->second.end())
        return std::nullopt;
    return kit->second.value;
}

int Config::line_of(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end())
        return 0;
    const auto kit = it->second.find(key);
    return kit == it->second.end() ? 0 : kit->second.line;
}

std::optional<double> Config::get_double(const std::string& section,
                                         const std::string& key) const {
    const auto raw = get_string(section, key);
    if (!raw)
        return std::nullopt;
    std::size_t pos = 0;
    double value = 0;
    try {
        value = std::stod(*raw, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != raw->size())
        throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                              ": [" + section + "] " + key + " must be a number, got '" +
                              *raw + "'");
    return value;
}

std::optional<int> Config::get_int(const std::string& section, const std::string& key) const {
    const auto raw = get_string(section, key);
    if (!raw)
        return std::nullopt;
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(*raw, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != raw->size())
        throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                              ": [" + section + "] " + key + " must be an integer, got '" +
                              *raw + "'");
    return static_cast<int>(value);
}

std::optional<bool> Config::get_bool(const std::string& section, const std::string& key) const {
    const auto raw = get_string(section, key);
    if (!raw)
        return std::nullopt;
    if (*raw == "true" || *raw == "1" || *raw == "yes" || *raw == "on")
        return true;
    if (*raw == "false" || *raw == "0" || *raw == "no" || *raw == "off")
        return false;
    throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                          ": [" + section + "] " + key + " must be a boolean, got '" + *raw +
                          "'");
}

std::optional<std::vector<double>> Config::get_doubles(const std::string& section,
                                                       const std::string& key) const {
    const auto raw = get_string(section, key);
    if (!raw)
        return std::nullopt;
    std::vector<double> values;
    std::istringstream ss(*raw);
    std::string tok;
    while (ss >> tok) {
        if (tok == ";")
            continue;
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != tok.size())
            throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                                  ": [" + section + "] " + key +
                                  " must be a list of numbers, got '" + tok + "'");
        values.push_back(v);
    }
    return values;
}

std::optional<std::vector<int>> Config::get_ints(const std::string& section,
                                                 const std::string& key) const {
    const auto doubles = get_doubles(section, key);
    if (!doubles)
        return std::nullopt;
    std::vector<int> values;
    values.reserve(doubles->size());
    for (double v : *doubles) {
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                                  ": [" + section + "] " + key + " must hold integers");
        values.push_back(i);
    }
    return values;
}

std::optional<Eigen::Vector3d> Config::get_vec3(const std::string& section,
                                                const std::string& key) const {
    const auto values = get_doubles(section, key);
    if (!values)
        return std::nullopt;
    if (values->size() != 3)
        throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                              ": [" + section + "] " + key + " must hold exactly 3 numbers");
    return Eigen::Vector3d((*values)[0], (*values)[1], (*values)[2]);
}

std::optional<Eigen::Vector2d> Config::get_vec2(const std::string& section,
                                                const std::string& key) const {
    const auto values = get_doubles(section, key);
    if (!values)
        return std::nullopt;
    if (values->size() != 2)
        throw ValidationError(source_name_ + ":" + std::to_string(line_of(section, key)) +
                              ": [" + section + "] " + key + " must hold exactly 2 numbers");
    return Eigen::Vector2d((*values)[0], (*values)[1]);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    auto& entry = sections_[section][key];
    entry.value = value;
    entry.line = 0;
}

void Config::check_known_keys() const {
    const auto& table = known_keys();
    std::vector<std::string> problems;
    for (const auto& [section, entries] : sections_) {
        const auto it = table.find(section);
        if (it == table.end()) {
            problems.push_back("unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, entry] : entries)
            if (!it->second.count(key))
                problems.push_back("unknown key '" + key + "' in [" + section + "] (line " +
                                   std::to_string(entry.line) + ")");
    }
    if (!problems.empty()) {
        std::string msg = source_name_ + ": invalid config:";
        for (const auto& p : problems)
            msg += "\n  - " + p;
        throw ValidationError(msg);
    }
}

void ValidationReport::throw_if_failed(const std::string& context) const {
    if (ok())
        return;
    std::string msg = context + ":";
    for (const auto& m : messages_)
        msg += "\n  - " + m;
    throw ValidationError(msg);
}

} // namespace modalsim::pipeline
