#include "addtrend/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "addtrend/errors.hpp"

namespace addtrend {

SortedDesign::SortedDesign(std::vector<std::vector<double>> raw)
    : columns_(std::move(raw)) {
    d_ = static_cast<int>(columns_.size());
    if (d_ < 1) throw ShapeMismatch("design needs at least one column");
    n_ = static_cast<int>(columns_[0].size());
    if (n_ < 1) throw ShapeMismatch("design needs at least one row");

    sorted_.resize(d_);
    rank_.resize(d_);
    order_.resize(d_);
    for (int j = 0; j < d_; ++j) {
        const auto& col = columns_[j];
        if (static_cast<int>(col.size()) != n_)
            throw ShapeMismatch("ragged design columns");
        for (double v : col)
            if (!std::isfinite(v)) throw NonFinite();

        std::vector<int> ord(n_);
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(),
                  [&](int a, int b) { return col[a] < col[b]; });

        std::vector<double> srt(n_);
        std::vector<int> rnk(n_);
        for (int r = 0; r < n_; ++r) {
            srt[r] = col[ord[r]];
            rnk[ord[r]] = r;
        }
        for (int r = 0; r + 1 < n_; ++r)
            if (!(srt[r] < srt[r + 1])) throw DuplicateInputs(j);

        sorted_[j] = std::move(srt);
        rank_[j] = std::move(rnk);
        order_[j] = std::move(ord);
    }
}

std::vector<double> SortedDesign::to_sorted(int j, std::span<const double> v) const {
    if (static_cast<int>(v.size()) != n_) throw ShapeMismatch("to_sorted length");
    std::vector<double> out(static_cast<std::size_t>(n_));
    const auto& ord = order_[j];
    for (int r = 0; r < n_; ++r) out[r] = v[ord[r]];
    return out;
}

std::vector<double> SortedDesign::from_sorted(int j, std::span<const double> v) const {
    if (static_cast<int>(v.size()) != n_) throw ShapeMismatch("from_sorted length");
    std::vector<double> out(static_cast<std::size_t>(n_));
    const auto& ord = order_[j];
    for (int r = 0; r < n_; ++r) out[ord[r]] = v[r];
    return out;
}

SortedDesign SortedDesign::subset(std::span<const int> rows) const {
    std::vector<std::vector<double>> raw(d_);
    for (int j = 0; j < d_; ++j) {
        raw[j].reserve(rows.size());
        for (int i : rows) raw[j].push_back(columns_[j][i]);
    }
    return SortedDesign(std::move(raw));
}

CenteredResponse center_response(std::span<const double> y) {
    if (y.empty()) throw ShapeMismatch("empty response");
    CenteredResponse out;
    out.y.assign(y.begin(), y.end());
    double sum = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) throw NonFinite();
        sum += v;
    }
    out.ybar = sum / static_cast<double>(y.size());
    out.centered.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.centered[i] = y[i] - out.ybar;
    return out;
}

}  // namespace addtrend
