#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfl/stats.hpp"

namespace mfl {

struct SeriesTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct FitRecord {
    std::string name;
    std::string x_label;
    std::string y_label;
    LinearFit fit;
    std::vector<double> x;
    std::vector<double> y;
};

/// A pass/fail verdict together with the threshold it was judged against.
struct Check {
    std::string name;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool passed = false;

    static Check within(std::string name, double value, double lower, double upper);
    static Check at_most(std::string name, double value, double upper);
    static Check at_least(std::string name, double value, double lower);
};

struct StudyReport {
    std::string kind;
    nlohmann::json config;
    std::vector<SeriesTable> tables;
    std::vector<FitRecord> fits;
    std::vector<Check> checks;
    std::uint64_t dataset_hash = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;

    bool passed() const;
    const Check* find_check(const std::string& name) const;
    const FitRecord* find_fit(const std::string& name) const;

    /// One CSV per table (<kind>_<table>.csv), one two-column .dat per fit and
    /// <kind>_summary.json. Tables and .dat files depend only on config and seed;
    /// wall-clock lives in the summary alone.
    void write(const std::filesystem::path& dir) const;
    nlohmann::json summary() const;
};

/// Shortest round-trip formatting (17 significant digits).
std::string format_double(double v);

void write_table_csv(std::ostream& os, const SeriesTable& table);

}  // namespace mfl
