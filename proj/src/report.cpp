#include "mfl/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <ostream>

#include "mfl/errors.hpp"

namespace mfl {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

Check Check::within(std::string name, double value, double lower, double upper) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.lower = lower;
    c.upper = upper;
    c.passed = value >= lower && value <= upper;
    return c;
}

Check Check::at_most(std::string name, double value, double upper) {
    return within(std::move(name), value, -std::numeric_limits<double>::infinity(), upper);
}

Check Check::at_least(std::string name, double value, double lower) {
    return within(std::move(name), value, lower, std::numeric_limits<double>::infinity());
}

bool StudyReport::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

const Check* StudyReport::find_check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

const FitRecord* StudyReport::find_fit(const std::string& name) const {
    for (const auto& f : fits)
        if (f.name == name) return &f;
    return nullptr;
}

void write_table_csv(std::ostream& os, const SeriesTable& table) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
        os << '\n';
    }
}

namespace {

nlohmann::json bound(double v) {
    if (std::isinf(v)) return nullptr;
    return v;
}

}  // namespace

nlohmann::json StudyReport::summary() const {
    nlohmann::json j;
    j["study"] = kind;
    j["passed"] = passed();
    j["seed"] = seed;
    j["dataset_hash"] = dataset_hash;
    j["wall_seconds"] = wall_seconds;
    j["config"] = config;
    j["fits"] = nlohmann::json::array();
    for (const auto& f : fits)
        j["fits"].push_back({{"name", f.name},
                             {"x", f.x_label},
                             {"y", f.y_label},
                             {"slope", f.fit.slope},
                             {"slope_se", f.fit.slope_se},
                             {"intercept", f.fit.intercept},
                             {"intercept_se", f.fit.intercept_se},
                             {"points", f.fit.n}});
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        j["checks"].push_back(
            {{"name", c.name}, {"value", c.value}, {"lower", bound(c.lower)}, {"upper", bound(c.upper)}, {"passed", c.passed}});
    return j;
}

void StudyReport::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& t : tables) {
        std::ofstream os(dir / (kind + "_" + t.name + ".csv"));
        if (!os) throw Error("cannot write " + (dir / (kind + "_" + t.name + ".csv")).string());
        write_table_csv(os, t);
    }
    for (const auto& f : fits) {
        std::ofstream os(dir / (kind + "_" + f.name + ".dat"));
        os << "# " << f.x_label << ' ' << f.y_label << '\n';
        for (std::size_t i = 0; i < f.x.size(); ++i) os << format_double(f.x[i]) << ' ' << format_double(f.y[i]) << '\n';
    }
    std::ofstream os(dir / (kind + "_summary.json"));
    os << summary().dump(2) << '\n';
}

}  // namespace mfl
