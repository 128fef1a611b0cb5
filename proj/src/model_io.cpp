#include "addtrend/model_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "addtrend/errors.hpp"

namespace addtrend {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_vector(std::ostream& out, const char* name, std::span<const double> v) {
    out << name;
    for (double x : v) out << ' ' << fmt(x);
    out << '\n';
}

}  // namespace

double PredictiveModel::predict(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != d) throw ShapeMismatch("predict: need d inputs");
    double v = ybar;
    for (int j = 0; j < d; ++j) v += components[j].predict(x[j]);
    return v;
}

std::vector<double> PredictiveModel::predict_rows(
    const std::vector<std::vector<double>>& columns) const {
    if (static_cast<int>(columns.size()) != d)
        throw ShapeMismatch("predict_rows: need d input columns");
    const std::size_t n = columns[0].size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = ybar;
        for (int j = 0; j < d; ++j) v += components[j].predict(columns[j][i]);
        out[i] = v;
    }
    return out;
}

PredictiveModel to_predictive(const AdditiveModel& model) {
    PredictiveModel out;
    out.k = model.k;
    out.d = model.design->d();
    out.ybar = model.ybar;
    out.lambdas = model.lambdas;
    for (int j = 0; j < out.d; ++j) {
        FFBasis basis(model.design->sorted(j), model.k);
        auto theta_sorted = model.design->to_sorted(j, model.components[j]);
        out.components.push_back(coefficients_from_theta(theta_sorted, basis));
    }
    return out;
}

void write_model(const PredictiveModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "addtrend-model 1\n";
    out << "k " << model.k << '\n';
    out << "d " << model.d << '\n';
    out << "ybar " << fmt(model.ybar) << '\n';
    write_vector(out, "lambdas", model.lambdas);
    for (int j = 0; j < model.d; ++j) {
        const auto& c = model.components[j];
        out << "component " << j << '\n';
        out << "n " << c.basis.n() << '\n';
        write_vector(out, "knots", c.basis.knots());
        write_vector(out, "a", c.a);
        write_vector(out, "b", c.b);
    }
    out << "end\n";
}

namespace {

std::vector<double> parse_vector(std::istringstream& ss, long line_no) {
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    if (!ss.eof()) throw ParseError(line_no, "malformed numeric list");
    return out;
}

}  // namespace

PredictiveModel read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file " + path);
    PredictiveModel model;
    std::string line, word;
    long line_no = 0;
    int version = -1;
    int current = -1;
    std::vector<double> knots, a, b;
    int comp_n = -1;

    auto flush_component = [&]() {
        if (current < 0) return;
        if (static_cast<int>(knots.size()) != comp_n)
            throw Error("model component " + std::to_string(current) + ": bad knot count");
        FFBasis basis(knots, model.k);
        FFCoefficients c{std::move(basis), std::move(a), std::move(b), {}};
        for (int m = 0; m < static_cast<int>(c.b.size()); ++m)
            if (c.b[m] != 0.0) c.nonzero_b.push_back(m);
        model.components.push_back(std::move(c));
        knots.clear();
        a.clear();
        b.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        ss >> word;
        if (line_no == 1 || version < 0) {
            if (word != "addtrend-model") throw ParseError(line_no, "not an addtrend model file");
            ss >> version;
            if (version != 1) throw ParseError(line_no, "unsupported model version");
            continue;
        }
        if (word == "k") ss >> model.k;
        else if (word == "d") ss >> model.d;
        else if (word == "ybar") ss >> model.ybar;
        else if (word == "lambdas") model.lambdas = parse_vector(ss, line_no);
        else if (word == "component") {
            flush_component();
            ss >> current;
        }
        else if (word == "n") ss >> comp_n;
        else if (word == "knots") knots = parse_vector(ss, line_no);
        else if (word == "a") a = parse_vector(ss, line_no);
        else if (word == "b") b = parse_vector(ss, line_no);
        else if (word == "end") break;
        else throw ParseError(line_no, "unknown field '" + word + "'");
        if (ss.fail()) throw ParseError(line_no, "malformed value for '" + word + "'");
    }
    flush_component();
    if (version != 1) throw Error(path + ": missing model header");
    if (static_cast<int>(model.components.size()) != model.d)
        throw Error(path + ": expected " + std::to_string(model.d) + " components");
    return model;
}

void write_coefficients_csv(const PredictiveModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "component,block,index,coefficient,knot\n";
    for (int j = 0; j < model.d; ++j) {
        const auto& c = model.components[j];
        for (int l = 0; l < static_cast<int>(c.a.size()); ++l)
            out << j << ",poly," << l << ',' << fmt(c.a[l]) << ",\n";
        const auto& kn = c.basis.knots();
        for (int m = 0; m < static_cast<int>(c.b.size()); ++m)
            out << j << ",knot," << m << ',' << fmt(c.b[m]) << ','
                << fmt(kn[m + model.k]) << '\n';
    }
}

}  // namespace addtrend
