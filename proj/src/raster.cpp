#include <finid/raster.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace finid {

namespace {

std::int64_t pixel_key(int x, int y) {
    return (static_cast<std::int64_t>(x) << 32) ^ static_cast<std::uint32_t>(y);
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Maximum-cardinality bipartite matching (Hopcroft-Karp).
class HopcroftKarp {
public:
    HopcroftKarp(const std::vector<std::vector<int>>& adj, std::size_t right_size)
        : adj_(adj), match_left_(adj.size(), -1), match_right_(right_size, -1), dist_(adj.size()) {}

    std::size_t solve() {
        std::size_t matching = 0;
        while (bfs()) {
            for (std::size_t u = 0; u < adj_.size(); ++u) {
                if (match_left_[u] == -1 && dfs(static_cast<int>(u))) ++matching;
            }
        }
        return matching;
    }

private:
    static constexpr int kInf = std::numeric_limits<int>::max();

    bool bfs() {
        std::queue<int> queue;
        bool reachable_free = false;
        for (std::size_t u = 0; u < adj_.size(); ++u) {
            if (match_left_[u] == -1) {
                dist_[u] = 0;
                queue.push(static_cast<int>(u));
            } else {
                dist_[u] = kInf;
            }
        }
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop();
            for (int v : adj_[static_cast<std::size_t>(u)]) {
                const int w = match_right_[static_cast<std::size_t>(v)];
                if (w == -1) {
                    reachable_free = true;
                } else if (dist_[static_cast<std::size_t>(w)] == kInf) {
                    dist_[static_cast<std::size_t>(w)] = dist_[static_cast<std::size_t>(u)] + 1;
                    queue.push(w);
                }
            }
        }
        return reachable_free;
    }

    bool dfs(int u) {
        for (int v : adj_[static_cast<std::size_t>(u)]) {
            const int w = match_right_[static_cast<std::size_t>(v)];
            if (w == -1 || (dist_[static_cast<std::size_t>(w)] == dist_[static_cast<std::size_t>(u)] + 1 && dfs(w))) {
                match_left_[static_cast<std::size_t>(u)] = v;
                match_right_[static_cast<std::size_t>(v)] = u;
                return true;
            }
        }
        dist_[static_cast<std::size_t>(u)] = kInf;
        return false;
    }

    const std::vector<std::vector<int>>& adj_;
    std::vector<int> match_left_;
    std::vector<int> match_right_;
    std::vector<int> dist_;
};

}  // namespace

std::vector<Pixel> rasterize(const PlanarCurve& curve) {
    constexpr double kStep = 0.25;
    std::vector<Pixel> out;
    std::unordered_set<std::int64_t> seen;
    const auto visit = [&](Point2 p) {
        const Pixel px{round_half_up(p.x), round_half_up(p.y)};
        if (seen.insert(pixel_key(px.x, px.y)).second) out.push_back(px);
    };
    const auto& pts = curve.points();
    for (std::size_t e = 0; e < curve.edge_count(); ++e) {
        const Point2 a = pts[e];
        const Point2 b = pts[(e + 1) % pts.size()];
        const auto steps = static_cast<std::size_t>(std::ceil(distance(a, b) / kStep));
        for (std::size_t k = 0; k < steps; ++k) {
            visit(a + (static_cast<double>(k) / static_cast<double>(steps)) * (b - a));
        }
    }
    if (!curve.closed()) visit(pts.back());
    return out;
}

FMeasure boundary_f_measure(const std::vector<Pixel>& candidate, const std::vector<Pixel>& truth,
                            double tol) {
    if (truth.empty()) throw Error("boundary_f_measure: empty ground-truth pixel set");
    FMeasure result;
    if (candidate.empty()) return result;

    std::unordered_map<std::int64_t, int> truth_index;
    truth_index.reserve(truth.size() * 2);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth_index.emplace(pixel_key(truth[i].x, truth[i].y), static_cast<int>(i));
    }
    const int reach = static_cast<int>(std::floor(tol));
    const double tol_sq = tol * tol;

    // Neighbours sorted by distance so the greedy fallback takes the nearest first.
    std::vector<std::vector<int>> adj(candidate.size());
    std::vector<std::pair<double, int>> scratch;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        scratch.clear();
        for (int dy = -reach; dy <= reach; ++dy) {
            for (int dx = -reach; dx <= reach; ++dx) {
                const double d2 = static_cast<double>(dx * dx + dy * dy);
                if (d2 > tol_sq) continue;
                const auto it = truth_index.find(pixel_key(candidate[i].x + dx, candidate[i].y + dy));
                if (it != truth_index.end()) scratch.emplace_back(d2, it->second);
            }
        }
        std::sort(scratch.begin(), scratch.end());
        for (const auto& [d2, j] : scratch) adj[i].push_back(j);
    }

    std::size_t matched = 0;
    if (candidate.size() <= kExactMatchingLimit && truth.size() <= kExactMatchingLimit) {
        matched = HopcroftKarp(adj, truth.size()).solve();
    } else {
        result.exact = false;
        std::vector<char> used(truth.size(), 0);
        for (const auto& neighbours : adj) {
            for (int j : neighbours) {
                if (!used[static_cast<std::size_t>(j)]) {
                    used[static_cast<std::size_t>(j)] = 1;
                    ++matched;
                    break;
                }
            }
        }
    }

    result.matched = matched;
    result.precision = static_cast<double>(matched) / static_cast<double>(candidate.size());
    result.recall = static_cast<double>(matched) / static_cast<double>(truth.size());
    const double denom = result.precision + result.recall;
    result.f = denom > 0.0 ? 2.0 * result.precision * result.recall / denom : 0.0;
    return result;
}

FMeasure contour_f_measure(const PlanarCurve& candidate, const PlanarCurve& truth, double tol) {
    return boundary_f_measure(rasterize(candidate), rasterize(truth), tol);
}

RegionMask::RegionMask(const PlanarCurve& boundary) {
    if (!boundary.closed()) throw Error("RegionMask: boundary must be closed");
    const auto& pts = boundary.points();
    double min_y = pts[0].y;
    double max_y = pts[0].y;
    for (const auto& p : pts) {
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    std::vector<double> crossings;
    for (int y = static_cast<int>(std::ceil(min_y)); y <= static_cast<int>(std::floor(max_y)); ++y) {
        crossings.clear();
        const double yc = static_cast<double>(y);
        for (std::size_t e = 0; e < pts.size(); ++e) {
            const Point2 a = pts[e];
            const Point2 b = pts[(e + 1) % pts.size()];
            if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
                crossings.push_back(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        std::sort(crossings.begin(), crossings.end());
        std::vector<std::pair<int, int>> spans;
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            const int x0 = static_cast<int>(std::ceil(crossings[k]));
            const int x1 = static_cast<int>(std::floor(crossings[k + 1]));
            if (x0 <= x1) {
                spans.emplace_back(x0, x1);
                area_ += x1 - x0 + 1;
            }
        }
        if (!spans.empty()) rows_.emplace(y, std::move(spans));
    }
}

std::int64_t RegionMask::intersection_area(const RegionMask& other) const {
    std::int64_t total = 0;
    for (const auto& [y, spans] : rows_) {
        const auto it = other.rows_.find(y);
        if (it == other.rows_.end()) continue;
        const auto& theirs = it->second;
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < spans.size() && j < theirs.size()) {
            const int lo = std::max(spans[i].first, theirs[j].first);
            const int hi = std::min(spans[i].second, theirs[j].second);
            if (lo <= hi) total += hi - lo + 1;
            if (spans[i].second < theirs[j].second) {
                ++i;
            } else {
                ++j;
            }
        }
    }
    return total;
}

double RegionMask::overlap(const RegionMask& other) const {
    const std::int64_t inter = intersection_area(other);
    const std::int64_t uni = area_ + other.area_ - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace finid
