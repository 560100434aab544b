#pragma once

// Connected components on equirectangular label maps. Adjacency is
// 4-neighborhood with column 0 touching column w-1; rows do not connect
// across the poles.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "sphsps/image.hpp"

namespace sphsps {

template <typename F>
inline void for_each_neighbor4(int x, int y, int w, int h, F&& f) {
    f(x == 0 ? w - 1 : x - 1, y);
    f(x == w - 1 ? 0 : x + 1, y);
    if (y > 0) f(x, y - 1);
    if (y < h - 1) f(x, y + 1);
}

struct Components {
    std::vector<std::int32_t> id;  // per pixel component index
    std::vector<std::int32_t> label;
    std::vector<std::int32_t> size;
    std::size_t count() const { return size.size(); }
};

/// Flood-fill component labeling under wrap-aware 4-adjacency.
inline Components connected_components(const LabelMap& labels) {
    const int w = labels.width(), h = labels.height();
    Components cc;
    cc.id.assign(labels.size(), -1);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < labels.size(); ++seed) {
        if (cc.id[seed] >= 0) continue;
        const auto comp = static_cast<std::int32_t>(cc.size.size());
        const auto lab = labels[seed];
        std::int32_t size = 0;
        cc.id[seed] = comp;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t q = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(q % w), y = static_cast<int>(q / w);
            for_each_neighbor4(x, y, w, h, [&](int nx, int ny) {
                const std::size_t n = labels.index(nx, ny);
                if (cc.id[n] < 0 && labels[n] == lab) {
                    cc.id[n] = comp;
                    stack.push_back(n);
                }
            });
        }
        cc.label.push_back(lab);
        cc.size.push_back(size);
    }
    return cc;
}

/// Number of components carrying each label.
inline std::map<std::int32_t, int> components_per_label(const LabelMap& labels) {
    const auto cc = connected_components(labels);
    std::map<std::int32_t, int> out;
    for (auto l : cc.label) ++out[l];
    return out;
}

/// Keeps, for every label, its largest component if it has at least
/// `min_size` pixels. Every other component is absorbed into the kept region
/// it shares the most boundary with (ties to the lower label), growing
/// outward from kept regions so each surviving label ends up connected.
inline LabelMap enforce_connectivity(const LabelMap& labels, int min_size) {
    const int w = labels.width(), h = labels.height();
    if (labels.empty()) return labels;
    const auto cc = connected_components(labels);
    const std::size_t ncomp = cc.count();

    std::map<std::int32_t, std::int32_t> largest;  // label -> component
    for (std::size_t c = 0; c < ncomp; ++c) {
        auto [it, inserted] = largest.try_emplace(cc.label[c], static_cast<std::int32_t>(c));
        if (!inserted && cc.size[c] > cc.size[it->second]) it->second = static_cast<std::int32_t>(c);
    }
    std::vector<std::int32_t> final_label(ncomp, -1);
    bool any = false;
    for (auto [lab, c] : largest) {
        if (cc.size[c] >= min_size) {
            final_label[c] = lab;
            any = true;
        }
    }
    if (!any) {
        const auto big = std::max_element(cc.size.begin(), cc.size.end()) - cc.size.begin();
        final_label[big] = cc.label[big];
    }

    // Component adjacency with shared-edge counts.
    std::vector<std::map<std::int32_t, int>> adj(ncomp);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto a = cc.id[labels.index(x, y)];
            for_each_neighbor4(x, y, w, h, [&](int nx, int ny) {
                const auto b = cc.id[labels.index(nx, ny)];
                if (a != b) ++adj[a][b];
            });
        }
    }

    // Absorb in waves: a pending component joins once it touches resolved ones.
    bool pending = true;
    while (pending) {
        pending = false;
        std::vector<std::pair<std::size_t, std::int32_t>> resolved_now;
        for (std::size_t c = 0; c < ncomp; ++c) {
            if (final_label[c] >= 0) continue;
            std::map<std::int32_t, int> votes;
            for (auto [b, n] : adj[c])
                if (final_label[b] >= 0) votes[final_label[b]] += n;
            if (votes.empty()) {
                pending = true;
                continue;
            }
            auto best = votes.begin();
            for (auto it = votes.begin(); it != votes.end(); ++it)
                if (it->second > best->second) best = it;
            resolved_now.emplace_back(c, best->first);
        }
        if (resolved_now.empty()) break;
        for (auto [c, lab] : resolved_now) final_label[c] = lab;
    }

    LabelMap out(w, h);
    for (std::size_t q = 0; q < labels.size(); ++q) out[q] = final_label[cc.id[q]];
    return out;
}

}  // namespace sphsps
