#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace modalsim::pipeline {

// Key = value sections. '#' starts a comment; section headers are
// "[name]" or "[name.subname]". Every knob of a run lives here so runs are
// reproducible from the file alone.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& name = "<string>");

    bool has_section(const std::string& section) const;
    bool has_key(const std::string& section, const std::string& key) const;

    std::optional<std::string> get_string(const std::string& section,
                                          const std::string& key) const;
    std::optional<double> get_double(const std::string& section, const std::string& key) const;
    std::optional<int> get_int(const std::string& section, const std::string& key) const;
    std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
    std::optional<std::vector<double>> get_doubles(const std::string& section,
                                                   const std::string& key) const;
    std::optional<std::vector<int>> get_ints(const std::string& section,
                                             const std::string& key) const;
    std::optional<Eigen::Vector3d> get_vec3(const std::string& section,
                                            const std::string& key) const;
    std::optional<Eigen::Vector2d> get_vec2(const std::string& section,
                                            const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    // Rejects unknown sections and keys so typos fail validation instead of
    // being silently ignored.
    void check_known_keys() const;

    const std::string& source_name() const { return source_name_; }
    int line_of(const std::string& section, const std::string& key) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::string source_name_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

// Accumulates validation problems so a run reports everything wrong with its
// config at once.
class ValidationReport {
public:
    void add(const std::string& message) { messages_.push_back(message); }
    bool ok() const { return messages_.empty(); }
    // Throws ValidationError with all collected messages.
    void throw_if_failed(const std::string& context) const;

private:
    std::vector<std::string> messages_;
};

} // namespace modalsim::pipeline
