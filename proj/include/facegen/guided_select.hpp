#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "facegen/guided_set.hpp"
#include "facegen/landmarks.hpp"
#include "facegen/losses.hpp"
#include "facegen/network.hpp"
#include "facegen/tensor.hpp"

namespace facegen {

/// One corpus face: image, landmarks and the signed attribute scores the
/// query language filters on.
struct CorpusEntry {
    std::string id;
    Image image;
    LandmarkSet landmarks;
    std::map<std::string, double> attributes;
};

// ---------------------------------------------------------------------------
// Attribute queries
// ---------------------------------------------------------------------------

/// One term of an attribute query: `name`, `name>thr` or `name<thr`.
/// A bare name means `> 0` (positive score = attribute present).
struct AttributeTerm {
    std::string name;
    char op = '>';
    double threshold = 0.0;

    bool matches(double score) const {
        return op == '>' ? score > threshold : score < threshold;
    }
};

struct AttributeQuery {
    std::vector<AttributeTerm> terms;  // conjunctive

    bool empty() const { return terms.empty(); }

    /// Attribute names the query mentions (used for mask construction).
    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const AttributeTerm& t : terms) out.push_back(t.name);
        return out;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses the comma-separated query mini-language, e.g.
/// "eyeglasses, smiling>0.5, chubby<0".
inline AttributeQuery parse_attribute_query(const std::string& text) {
    AttributeQuery query;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string raw = detail::trim(
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        start = comma == std::string::npos ? text.size() + 1 : comma + 1;
        if (raw.empty()) continue;
        AttributeTerm term;
        std::size_t op_pos = raw.find_first_of("<>");
        if (op_pos == std::string::npos) {
            term.name = raw;
        } else {
            term.name = detail::trim(raw.substr(0, op_pos));
            term.op = raw[op_pos];
            std::string thr = detail::trim(raw.substr(op_pos + 1));
            std::size_t used = 0;
            term.threshold = std::stod(thr, &used);
            if (used != thr.size())
                throw std::invalid_argument("bad threshold in query term '" + raw + "'");
        }
        if (term.name.empty())
            throw std::invalid_argument("empty attribute name in query term '" + raw + "'");
        query.terms.push_back(term);
    }
    return query;
}

/// Keeps the entries satisfying every query term, in corpus order. An
/// attribute name missing from any entry is an error; an empty result is not.
inline std::vector<CorpusEntry> filter_by_attributes(const std::vector<CorpusEntry>& corpus,
                                                     const AttributeQuery& query) {
    for (const AttributeTerm& term : query.terms)
        for (const CorpusEntry& entry : corpus)
            if (!entry.attributes.count(term.name))
                throw std::invalid_argument("unknown attribute '" + term.name +
                                            "' (entry '" + entry.id + "' has no such score)");
    std::vector<CorpusEntry> out;
    for (const CorpusEntry& entry : corpus) {
        bool ok = true;
        for (const AttributeTerm& term : query.terms)
            if (!term.matches(entry.attributes.at(term.name))) {
                ok = false;
                break;
            }
        if (ok) out.push_back(entry);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

struct RankedCandidate {
    CorpusEntry entry;
    double distance = 0.0;  // combined similarity D_a
};

struct RankResult {
    std::vector<RankedCandidate> ranked;  // ascending by distance, ties by id
    bool pose_term_degenerate = false;
    bool content_term_degenerate = false;
};

/// Combined similarity: pose and content distances to the reference, each
/// normalized by its sum over the candidate set, mixed by alpha:
///   D_a(i) = (1-alpha) * Dp(i)/sum_k Dp(k) + alpha * Dc(i)/sum_k Dc(k).
/// A zero denominator drops that term for all candidates (flagged).
inline RankResult rank_candidates(const std::vector<CorpusEntry>& candidates,
                                  const CorpusEntry& ref, double alpha,
                                  const NetworkSpec& net, const std::string& layer) {
    if (candidates.empty()) throw std::invalid_argument("rank_candidates: no candidates");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("rank_candidates: alpha must be in [0,1]");

    std::vector<double> pose(candidates.size()), content(candidates.size());
    double pose_sum = 0.0, content_sum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        pose[i] = pose_distance(candidates[i].landmarks, ref.landmarks);
        pose_sum += pose[i];
        // alpha = 0 never reads the content distances; skip the forward passes.
        if (alpha > 0.0) {
            content[i] = perceptual_value(net, layer, candidates[i].image, ref.image);
            content_sum += content[i];
        }
    }

    RankResult result;
    result.pose_term_degenerate = pose_sum == 0.0;
    result.content_term_degenerate = alpha > 0.0 && content_sum == 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double d = 0.0;
        if (pose_sum != 0.0) d += (1.0 - alpha) * pose[i] / pose_sum;
        if (alpha > 0.0 && content_sum != 0.0) d += alpha * content[i] / content_sum;
        result.ranked.push_back({candidates[i], d});
    }
    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](const RankedCandidate& a, const RankedCandidate& b) {
                         if (a.distance != b.distance) return a.distance < b.distance;
                         return a.entry.id < b.entry.id;
                     });
    return result;
}

// ---------------------------------------------------------------------------
// Weights and selection
// ---------------------------------------------------------------------------

enum class WeightScheme { kUniform, kInverseDistance };

inline WeightScheme parse_weight_scheme(const std::string& name) {
    if (name == "uniform") return WeightScheme::kUniform;
    if (name == "inverse-distance") return WeightScheme::kInverseDistance;
    throw std::invalid_argument("unknown weight scheme '" + name + "'");
}

/// Weights for the selected faces: uniform 1/k, or proportional to
/// 1/(distance + 1e-6), normalized to sum 1.
inline std::vector<double> assign_weights(const std::vector<double>& distances,
                                          WeightScheme scheme) {
    if (distances.empty()) throw std::invalid_argument("assign_weights: no distances");
    std::vector<double> weights(distances.size());
    if (scheme == WeightScheme::kUniform) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(distances.size()));
        return weights;
    }
    constexpr double kEpsilon = 1e-6;
    double sum = 0.0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (distances[i] < 0.0)
            throw std::invalid_argument("assign_weights: negative distance");
        weights[i] = 1.0 / (distances[i] + kEpsilon);
        sum += weights[i];
    }
    for (double& w : weights) w /= sum;
    return weights;
}

struct SelectionConfig {
    AttributeQuery query;
    int k = 5;
    double alpha = 0.5;
    std::string layer;  // content-distance layer, independent of the loss layer
    WeightScheme weight_scheme = WeightScheme::kUniform;
    bool exclude_reference = true;  // drop entries sharing the reference id
};

/// Filters the corpus by the query, ranks by combined similarity to the
/// reference and keeps the top k with weights attached.
inline GuidedSet select_guided_set(const std::vector<CorpusEntry>& corpus,
                                   const SelectionConfig& cfg, const CorpusEntry& ref,
                                   const NetworkSpec& net) {
    if (cfg.k < 1) throw std::invalid_argument("select_guided_set: k must be >= 1");
    std::vector<CorpusEntry> filtered = filter_by_attributes(corpus, cfg.query);
    if (cfg.exclude_reference) {
        std::erase_if(filtered, [&](const CorpusEntry& e) { return e.id == ref.id; });
    }
    if (static_cast<int>(filtered.size()) < cfg.k)
        throw std::runtime_error("select_guided_set: query matched " +
                                 std::to_string(filtered.size()) + " faces, need k=" +
                                 std::to_string(cfg.k));

    RankResult ranked = rank_candidates(filtered, ref, cfg.alpha, net, cfg.layer);

    std::vector<double> distances;
    for (int i = 0; i < cfg.k; ++i) distances.push_back(ranked.ranked[i].distance);
    std::vector<double> weights = assign_weights(distances, cfg.weight_scheme);

    GuidedSet set;
    set.pose_term_degenerate = ranked.pose_term_degenerate;
    set.content_term_degenerate = ranked.content_term_degenerate;
    for (int i = 0; i < cfg.k; ++i)
        set.entries.push_back({ranked.ranked[i].entry.id, ranked.ranked[i].entry.image,
                               weights[i], distances[i]});
    set.validate();
    return set;
}

}  // namespace facegen
