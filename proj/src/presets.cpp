#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "symco/kernels.hpp"
#include "symco/synth.hpp"

namespace symco::synth {

namespace {

using C = Category;

struct Entry {
    const char* id;
    const char* label;
    Category category;
    double frequency;
};

DatasetPreset make(std::string name, std::initializer_list<Entry> entries, double symptomatic,
                   std::vector<double> decades, double female) {
    DatasetPreset p;
    p.name = std::move(name);
    for (const auto& e : entries) {
        p.symptoms.push_back({e.id, e.label, e.category});
        p.frequencies.push_back(e.frequency);
    }
    p.symptomatic = symptomatic;
    p.decade_weights = std::move(decades);
    p.female_share = female;
    p.phenotype_ratio = 0.5;
    p.missing_rate = 0.01;
    return p;
}

std::map<std::string, DatasetPreset> build_presets() {
    std::map<std::string, DatasetPreset> out;

    const std::vector<double> tt_ages = {70051, 154848, 323244, 343935, 292823, 267361, 125840, 41814, 12889, 2222};
    out.emplace("pillar2", make("pillar2",
                                {{"altered_consciousness", "Altered consciousness", C::altered_state, 0.02},
                                 {"cough", "Cough", C::lower_respiratory, 0.50},
                                 {"diarrhoea", "Diarrhoea", C::gastrointestinal, 0.15},
                                 {"fatigue", "Fatigue", C::systemic, 0.45},
                                 {"fever", "Fever", C::systemic, 0.28},
                                 {"headache", "Headache", C::systemic, 0.50},
                                 {"joint_pain", "Joint pain", C::systemic, 0.20},
                                 {"loss_of_appetite", "Loss of appetite", C::gastrointestinal, 0.28},
                                 {"loss_smell_taste", "Loss of smell or taste", C::upper_respiratory, 0.35},
                                 {"muscle_ache", "Muscle ache", C::systemic, 0.40},
                                 {"nausea", "Nausea", C::gastrointestinal, 0.15},
                                 {"nose_bleed", "Nose bleed", C::other, 0.02},
                                 {"rash", "Rash", C::other, 0.02},
                                 {"rhinitis", "Rhinitis", C::upper_respiratory, 0.25},
                                 {"seizures", "Seizures", C::altered_state, 0.01},
                                 {"sneezing", "Sneezing", C::upper_respiratory, 0.25},
                                 {"sore_throat", "Sore throat", C::upper_respiratory, 0.35},
                                 {"vomiting", "Vomiting", C::gastrointestinal, 0.05}},
                                0.863, tt_ages, 0.550));

    const std::vector<double> sgss_ages = {2759, 3966, 16250, 19398, 18673, 19221, 12453, 9963, 7488, 2158};
    out.emplace("sgss", make("sgss",
                             {{"altered_consciousness", "Altered consciousness", C::altered_state, 0.04},
                              {"cough", "Cough", C::lower_respiratory, 0.45},
                              {"diarrhoea", "Diarrhoea", C::gastrointestinal, 0.16},
                              {"fatigue", "Fatigue", C::systemic, 0.45},
                              {"fever", "Fever", C::systemic, 0.30},
                              {"headache", "Headache", C::systemic, 0.48},
                              {"joint_pain", "Joint pain", C::systemic, 0.18},
                              {"loss_of_appetite", "Loss of appetite", C::gastrointestinal, 0.30},
                              {"loss_smell_taste", "Loss of smell or taste", C::upper_respiratory, 0.31},
                              {"muscle_ache", "Muscle ache", C::systemic, 0.36},
                              {"nausea", "Nausea", C::gastrointestinal, 0.16},
                              {"nose_bleed", "Nose bleed", C::other, 0.02},
                              {"rash", "Rash", C::other, 0.02},
                              {"rhinitis", "Rhinitis", C::upper_respiratory, 0.22},
                              {"seizures", "Seizures", C::altered_state, 0.01},
                              {"sneezing", "Sneezing", C::upper_respiratory, 0.22},
                              {"sore_throat", "Sore throat", C::upper_respiratory, 0.32},
                              {"vomiting", "Vomiting", C::gastrointestinal, 0.06}},
                             0.629, sgss_ages, 0.597));

    const std::vector<double> css_ages = {1256, 4891, 7716, 10075, 12896, 14263, 7709, 2261, 396, 0};
    auto css = make("css",
                    {{"abdominal_pain", "Abdominal pain", C::gastrointestinal, 0.15},
                     {"loss_smell_taste", "Altered or lost smell", C::upper_respiratory, 0.52},
                     {"chest_pain", "Chest pain", C::lower_respiratory, 0.26},
                     {"cough", "Cough", C::lower_respiratory, 0.55},
                     {"delirium", "Delirium", C::altered_state, 0.08},
                     {"diarrhoea", "Diarrhoea", C::gastrointestinal, 0.18},
                     {"fatigue", "Fatigue", C::systemic, 0.50},
                     {"fever", "Fever", C::systemic, 0.28},
                     {"headache", "Headache", C::systemic, 0.65},
                     {"hoarse_voice", "Hoarse voice", C::upper_respiratory, 0.25},
                     {"loss_of_appetite", "Loss of appetite", C::gastrointestinal, 0.30},
                     {"muscle_ache", "Muscle ache", C::systemic, 0.35},
                     {"shortness_of_breath", "Shortness of breath", C::lower_respiratory, 0.05},
                     {"sore_throat", "Sore throat", C::upper_respiratory, 0.42}},
                    0.845, css_ages, 0.618);
    css.rules.emplace_back("fatigue", std::vector<std::string>{"none", "mild", "severe"}, "severe");
    css.rules.emplace_back("shortness_of_breath", std::vector<std::string>{"no", "mild", "significant", "severe"},
                           "significant");
    out.emplace("css", std::move(css));

    const std::vector<double> cis_ages = {255, 979, 1106, 1416, 1746, 1827, 1153, 552, 120, 0};
    out.emplace("cis", make("cis",
                            {{"abdominal_pain", "Abdominal pain", C::gastrointestinal, 0.15},
                             {"cough", "Cough", C::lower_respiratory, 0.40},
                             {"diarrhoea", "Diarrhoea", C::gastrointestinal, 0.15},
                             {"fatigue", "Fatigue", C::systemic, 0.45},
                             {"fever", "Fever", C::systemic, 0.28},
                             {"headache", "Headache", C::systemic, 0.50},
                             {"loss_of_smell", "Loss of smell", C::upper_respiratory, 0.32},
                             {"loss_of_taste", "Loss of taste", C::upper_respiratory, 0.33},
                             {"muscle_ache", "Muscle ache", C::systemic, 0.35},
                             {"nausea_vomiting", "Nausea or vomiting", C::gastrointestinal, 0.12},
                             {"shortness_of_breath", "Shortness of breath", C::lower_respiratory, 0.24},
                             {"sore_throat", "Sore throat", C::upper_respiratory, 0.35}},
                            0.328, cis_ages, 0.548));
    return out;
}

double phenotype_weight(Category c) {
    switch (c) {
        case C::upper_respiratory: return 1.0;
        case C::lower_respiratory: return 0.5;
        case C::systemic: return 0.0;
        case C::gastrointestinal: return -1.0;
        case C::altered_state: return -0.5;
        case C::other: return 0.25;
    }
    return 0.0;
}

struct Rule {
    std::vector<double> nodes;    // standard-normal abscissae
    std::vector<double> weights;  // sum to 1
};

/// Golub-Welsch for the probabilists' Hermite weight.
const Rule& hermite_rule(int n) {
    static std::mutex guard;
    static std::map<int, Rule> cache;
    std::lock_guard lock(guard);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    Rule r;
    for (int i = 0; i < n; ++i) {
        r.nodes.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        r.weights.push_back(v * v);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

constexpr int kNodes = 40;

double marginal(double offset, double sd) {
    const auto& r = hermite_rule(kNodes);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * kernels::sigmoid(offset + sd * r.nodes[i]);
    return s;
}

double solve_offset(double target, double sd) {
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (marginal(mid, sd) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Solved {
    Eigen::VectorXd offsets;
    double symptomatic;
};

Solved solve_at(const DatasetPreset& p, const Eigen::MatrixXd& u, double scale_s) {
    const double scale_t = p.phenotype_ratio * scale_s;
    const auto n = static_cast<Eigen::Index>(p.symptoms.size());
    Solved out{Eigen::VectorXd(n), 0.0};
    for (Eigen::Index a = 0; a < n; ++a) {
        const double sd = std::hypot(scale_s * u(a, 0), scale_t * u(a, 1));
        out.offsets(a) = solve_offset(p.frequencies[static_cast<std::size_t>(a)] * p.symptomatic, sd);
    }
    const auto& r = hermite_rule(kNodes);
    const double observe = 1.0 - p.missing_rate;
    double none = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        for (std::size_t j = 0; j < r.nodes.size(); ++j) {
            double prod = 1.0;
            for (Eigen::Index a = 0; a < n; ++a) {
                const double eta = out.offsets(a) + scale_s * r.nodes[i] * u(a, 0) + scale_t * r.nodes[j] * u(a, 1);
                prod *= 1.0 - observe * kernels::sigmoid(eta);
            }
            none += r.weights[i] * r.weights[j] * prod;
        }
    }
    out.symptomatic = 1.0 - none;
    return out;
}

}  // namespace

Taxonomy DatasetPreset::taxonomy() const { return Taxonomy{symptoms, rules}; }

Eigen::MatrixXd DatasetPreset::raw_loadings() const {
    Eigen::MatrixXd u(static_cast<Eigen::Index>(symptoms.size()), 2);
    for (std::size_t a = 0; a < symptoms.size(); ++a) {
        u(static_cast<Eigen::Index>(a), 0) = 1.0;
        u(static_cast<Eigen::Index>(a), 1) = phenotype_weight(symptoms[a].category);
    }
    return u;
}

std::vector<std::string> preset_names() { return {"pillar2", "sgss", "css", "cis"}; }

const DatasetPreset& preset(const std::string& name) {
    static const auto presets = build_presets();
    auto it = presets.find(name);
    if (it == presets.end()) {
        throw std::invalid_argument("unknown dataset preset '" + name + "' (expected pillar2, sgss, css or cis)");
    }
    return it->second;
}

double gauss_hermite_expectation(const std::function<double(double)>& f, int nodes) {
    if (nodes < 1) throw std::invalid_argument("quadrature needs at least one node");
    const auto& r = hermite_rule(nodes);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
    return s;
}

Calibration calibrate(const DatasetPreset& p) {
    if (p.frequencies.size() != p.symptoms.size()) throw std::invalid_argument("one frequency per symptom is required");
    for (double f : p.frequencies) {
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("preset frequencies must lie in (0, 1)");
    }
    const Eigen::MatrixXd u = orthonormalize(p.raw_loadings());

    // P(symptomatic) falls as the shared severity factor grows.
    double lo = 0.0, hi = 40.0;
    const auto at_lo = solve_at(p, u, lo);
    const auto at_hi = solve_at(p, u, hi);
    if (at_lo.symptomatic < p.symptomatic || at_hi.symptomatic > p.symptomatic) {
        throw std::invalid_argument("preset '" + p.name + "': symptomatic share " + std::to_string(p.symptomatic) +
                                    " is not reachable with these frequencies");
    }
    for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (solve_at(p, u, mid).symptomatic > p.symptomatic ? lo : hi) = mid;
    }
    const double scale = 0.5 * (lo + hi);
    const auto solved = solve_at(p, u, scale);
    return {solved.offsets, {scale, p.phenotype_ratio * scale}, solved.symptomatic};
}

GeneratorSpec preset_spec(const DatasetPreset& p, std::size_t n, std::uint64_t seed) {
    // Built-in presets are calibrated once per process.
    static std::mutex guard;
    static std::map<const DatasetPreset*, Calibration> cache;
    Calibration cal;
    const auto names = preset_names();
    const bool builtin = std::find(names.begin(), names.end(), p.name) != names.end() && &preset(p.name) == &p;
    if (builtin) {
        std::lock_guard lock(guard);
        auto it = cache.find(&p);
        if (it == cache.end()) it = cache.emplace(&p, calibrate(p)).first;
        cal = it->second;
    } else {
        cal = calibrate(p);
    }

    GeneratorSpec spec;
    spec.n = n;
    spec.symptoms = p.symptoms;
    spec.loadings = orthonormalize(p.raw_loadings());
    spec.offsets = cal.offsets;
    spec.factor_scales = cal.factor_scales;
    spec.missing_rate = p.missing_rate;
    spec.decade_weights = p.decade_weights;
    spec.female_share = p.female_share;
    spec.seed = seed;
    return spec;
}

}  // namespace symco::synth
