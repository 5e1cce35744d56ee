#include "symco/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace symco::svg {

namespace {

using artifact::json;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
}

std::string text(double x, double y, const std::string& s, const std::string& extra = "") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"" + extra + ">" + escape(s) + "</text>\n";
}

const std::map<std::string, std::string>& palette() {
    static const std::map<std::string, std::string> colours = {
        {"systemic", "#1b9e77"},         {"lower_respiratory", "#d95f02"}, {"upper_respiratory", "#7570b3"},
        {"gastrointestinal", "#e7298a"}, {"altered_state", "#66a61e"},     {"other", "#a6761d"}};
    return colours;
}

std::string colour_of(const std::string& category) {
    const auto it = palette().find(category);
    return it == palette().end() ? "#666666" : it->second;
}

// White (0) to dark blue (1); grey for undefined.
std::string heat(const json& v) {
    if (!v.is_number()) return "#cccccc";
    const double t = std::clamp(1.0 - v.get<double>(), 0.0, 1.0);
    const auto mix = [t](int lo, int hi) { return static_cast<int>(std::lround(lo + t * (hi - lo))); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(255, 8), mix(255, 48), mix(255, 107));
    return buf;
}

void expect_kind(const json& a, const std::string& kind) {
    if (!a.is_object() || a.value("kind", "") != kind) {
        throw std::invalid_argument("expected a '" + kind + "' artifact");
    }
}

std::string heatmap(const json& a) {
    expect_kind(a, "dendrogram");
    const auto& labels = a.at("heatmap").at("labels");
    const auto& d = a.at("heatmap").at("D");
    const std::size_t p = labels.size();
    if (p == 0) throw std::invalid_argument("empty distance matrix");
    const double cell = 18.0, margin = 130.0;
    const double size = margin + cell * static_cast<double>(p) + 10.0;
    std::string s = header(size, size);
    for (std::size_t i = 0; i < p; ++i) {
        const double pos = margin + cell * static_cast<double>(i);
        s += text(margin - 4.0, pos + cell * 0.7, labels[i].get<std::string>(), " text-anchor=\"end\"");
        s += text(pos + cell * 0.7, margin - 4.0, labels[i].get<std::string>(),
                  " transform=\"rotate(-90 " + num(pos + cell * 0.7) + " " + num(margin - 4.0) + ")\"");
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const auto& v = d[i * p + j];
            s += "<rect x=\"" + num(margin + cell * static_cast<double>(j)) + "\" y=\"" +
                 num(margin + cell * static_cast<double>(i)) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
                 "\" fill=\"" + heat(v) + "\" data-value=\"" + (v.is_number() ? exact(v.get<double>()) : "NA") +
                 "\"/>\n";
        }
    }
    return s + "</svg>\n";
}

std::string dendrogram(const json& a) {
    expect_kind(a, "dendrogram");
    const auto& leaves = a.at("leaves");
    const auto& merges = a.at("merges");
    const auto order = a.at("order").get<std::vector<std::size_t>>();
    const std::size_t p = leaves.size();
    if (p == 0) throw std::invalid_argument("empty dendrogram");

    double top = 0.0;
    for (const auto& m : merges) top = std::max(top, m.at("height").get<double>());
    if (!(top > 0.0)) top = 1.0;

    const double step = 20.0, label_w = 130.0, plot_w = 300.0, pad = 10.0;
    const double height = pad * 2 + step * static_cast<double>(p);
    std::string s = header(label_w + plot_w + pad * 2, height);

    // Leaves run top to bottom in leaf order; height grows to the right.
    std::vector<double> y(2 * p, 0.0), x(2 * p, label_w);
    for (std::size_t r = 0; r < order.size(); ++r) {
        y[order[r]] = pad + step * (static_cast<double>(r) + 0.5);
        s += text(label_w - 4.0, y[order[r]] + 3.0, leaves[order[r]].get<std::string>(), " text-anchor=\"end\"");
    }
    for (std::size_t i = 0; i < merges.size(); ++i) {
        const auto& m = merges[i];
        const auto l = m.at("left").get<std::size_t>(), r = m.at("right").get<std::size_t>();
        const double h = m.at("height").get<double>();
        const double xh = label_w + plot_w * h / top;
        s += "<path class=\"merge\" data-height=\"" + exact(h) + "\" d=\"M" + num(x[l]) + " " + num(y[l]) + " H" +
             num(xh) + " V" + num(y[r]) + " H" + num(x[r]) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
        x[p + i] = xh;
        y[p + i] = 0.5 * (y[l] + y[r]);
    }
    return s + "</svg>\n";
}

std::string loadings(const json& a) {
    expect_kind(a, "lpca");
    const auto& bars = a.at("bars");
    if (bars.empty()) throw std::invalid_argument("model has no components");
    const std::size_t p = a.at("labels").size();
    const double bar_h = 14.0, label_w = 130.0, panel_w = 220.0, pad = 20.0;
    const double width = label_w + (panel_w + pad) * static_cast<double>(bars.size());
    const double height = 2 * pad + bar_h * static_cast<double>(p);
    std::string s = header(width, height);
    for (std::size_t c = 0; c < bars.size(); ++c) {
        const auto& rows = bars[c].at("rows");
        double scale = 0.0;
        for (const auto& r : rows) scale = std::max(scale, std::abs(r.at("loading").get<double>()));
        if (!(scale > 0.0)) scale = 1.0;
        const double x0 = label_w + (panel_w + pad) * static_cast<double>(c);
        const double mid = x0 + panel_w / 2;
        s += text(mid, pad - 6.0, "component " + std::to_string(c + 1), " text-anchor=\"middle\"");
        s += "<line x1=\"" + num(mid) + "\" y1=\"" + num(pad) + "\" x2=\"" + num(mid) + "\" y2=\"" +
             num(height - pad) + "\" stroke=\"#999999\"/>\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            const double v = r.at("loading").get<double>();
            const double len = (panel_w / 2 - 4.0) * std::abs(v) / scale;
            const double y = pad + bar_h * static_cast<double>(i);
            if (c == 0) s += text(label_w - 4.0, y + bar_h * 0.75, r.at("symptom").get<std::string>(), " text-anchor=\"end\"");
            const std::string cat = r.at("category").get<std::string>();
            s += "<rect x=\"" + num(v < 0 ? mid - len : mid) + "\" y=\"" + num(y + 1.0) + "\" width=\"" + num(len) +
                 "\" height=\"" + num(bar_h - 2.0) + "\" fill=\"" + colour_of(cat) + "\" data-category=\"" + cat +
                 "\" data-loading=\"" + exact(v) + "\"/>\n";
        }
    }
    return s + "</svg>\n";
}

// Scatter of one embedding into the box [x0, x0 + size] x [y0, y0 + size].
std::string scatter(const json& e, double x0, double y0, double size) {
    const auto& labels = e.at("labels");
    const auto& coords = e.at("coords");
    const auto& freq = e.at("frequency");
    if (labels.empty()) throw std::invalid_argument("embedding has no points");
    double lo_x = coords[0][0], hi_x = lo_x, lo_y = coords[0][1], hi_y = lo_y;
    double fmax = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        lo_x = std::min(lo_x, coords[i][0].get<double>());
        hi_x = std::max(hi_x, coords[i][0].get<double>());
        lo_y = std::min(lo_y, coords[i][1].get<double>());
        hi_y = std::max(hi_y, coords[i][1].get<double>());
        fmax = std::max(fmax, freq[i].get<double>());
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
    const double inner = size - 60.0, r_max = 14.0;
    std::string s;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const double px = x0 + 30.0 + inner * (coords[i][0].get<double>() - lo_x) / span;
        const double py = y0 + 30.0 + inner * (hi_y - coords[i][1].get<double>()) / span;
        const double f = freq[i].get<double>();
        // Radius proportional to frequency, with a floor so rare symptoms stay visible.
        const double r = std::max(1.5, fmax > 0 ? r_max * f / fmax : 1.5);
        s += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"" + num(r) +
             "\" fill=\"#4477aa\" fill-opacity=\"0.6\" data-frequency=\"" + exact(f) + "\"/>\n";
        s += text(px + r + 2.0, py + 3.0, labels[i].get<std::string>());
    }
    return s;
}

std::string embedding(const json& a) {
    expect_kind(a, "embedding");
    const double size = 480.0;
    return header(size, size) + scatter(a, 0.0, 0.0, size) + "</svg>\n";
}

std::string aligned(const json& a) {
    expect_kind(a, "aligned");
    const auto& emb = a.at("embeddings");
    if (emb.empty()) throw std::invalid_argument("aligned set has no embeddings");
    const auto& strata = a.at("strata");
    const auto& positions = a.at("positions");
    const double size = 360.0;
    std::string s = header(size * static_cast<double>(emb.size()), size + 20.0);
    for (std::size_t i = 0; i < emb.size(); ++i) {
        const double x0 = size * static_cast<double>(i);
        s += text(x0 + size / 2, 14.0, strata[positions[i].get<std::size_t>()].get<std::string>(),
                  " text-anchor=\"middle\"");
        s += scatter(emb[i], x0, 20.0, size);
    }
    return s + "</svg>\n";
}

}  // namespace

std::vector<std::string> kinds() { return {"heatmap", "dendrogram", "loadings", "embedding", "aligned"}; }

std::string emit_svg(const artifact::json& a, const std::string& kind) {
    if (kind == "heatmap") return heatmap(a);
    if (kind == "dendrogram") return dendrogram(a);
    if (kind == "loadings") return loadings(a);
    if (kind == "embedding") return embedding(a);
    if (kind == "aligned") return aligned(a);
    throw std::invalid_argument("unknown SVG kind '" + kind + "'");
}

}  // namespace symco::svg
