#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "facegen/guided_select.hpp"
#include "facegen/image_io.hpp"
#include "facegen/landmarks.hpp"

namespace facegen {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

inline double parse_number(const std::string& text, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::runtime_error(where + ": not a number: '" + text + "'");
    }
    if (used != text.size()) throw std::runtime_error(where + ": not a number: '" + text + "'");
    return v;
}

inline bool looks_numeric(const std::string& text) {
    std::size_t used = 0;
    try {
        std::stod(text, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == text.size();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Attribute table: CSV with header `id,<attr1>,<attr2>,...`, signed scores
// ---------------------------------------------------------------------------

struct AttributeTable {
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::vector<double>>> rows;  // file order
};

inline AttributeTable load_attribute_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open attribute table: " + path);
    AttributeTable table;
    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        std::string where = path + " line " + std::to_string(line_no);
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (table.names.empty()) {
            if (fields.size() < 2 || fields[0] != "id")
                throw std::runtime_error(where + ": expected header 'id,<attr>,...'");
            for (std::size_t i = 1; i < fields.size(); ++i) {
                if (fields[i].empty())
                    throw std::runtime_error(where + ": empty attribute name in header");
                table.names.push_back(fields[i]);
            }
            continue;
        }
        if (fields.size() != table.names.size() + 1)
            throw std::runtime_error(where + ": expected " +
                                     std::to_string(table.names.size() + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        if (fields[0].empty()) throw std::runtime_error(where + ": empty id");
        if (!seen.insert(fields[0]).second)
            throw std::runtime_error(where + ": duplicate id '" + fields[0] + "'");
        std::vector<double> scores;
        scores.reserve(table.names.size());
        for (std::size_t i = 1; i < fields.size(); ++i)
            scores.push_back(detail::parse_number(fields[i], where));
        table.rows.emplace_back(fields[0], std::move(scores));
    }
    if (table.names.empty()) throw std::runtime_error(path + ": missing header row");
    return table;
}

// ---------------------------------------------------------------------------
// Landmark table: CSV rows `id,x1,y1,...,x68,y68` (a header row is skipped)
// ---------------------------------------------------------------------------

inline std::unordered_map<std::string, LandmarkSet> load_landmark_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open landmark table: " + path);
    std::unordered_map<std::string, LandmarkSet> table;
    std::string line;
    int line_no = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string where = path + " line " + std::to_string(line_no);
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (first_data_line && fields.size() > 1 && !detail::looks_numeric(fields[1])) {
            first_data_line = false;  // header
            continue;
        }
        first_data_line = false;
        if (fields.size() != 1 + 2 * static_cast<std::size_t>(kLandmarkCount))
            throw std::runtime_error(where + ": expected " +
                                     std::to_string(1 + 2 * kLandmarkCount) + " fields, got " +
                                     std::to_string(fields.size()));
        if (fields[0].empty()) throw std::runtime_error(where + ": empty id");
        LandmarkSet lm;
        for (int i = 0; i < kLandmarkCount; ++i) {
            lm.points[i].x = detail::parse_number(fields[1 + 2 * i], where);
            lm.points[i].y = detail::parse_number(fields[2 + 2 * i], where);
        }
        lm.validate_finite();
        if (!table.emplace(fields[0], lm).second)
            throw std::runtime_error(where + ": duplicate id '" + fields[0] + "'");
    }
    return table;
}

/// Exclusion list: one id per line, blank lines and `#` comments ignored.
inline std::set<std::string> load_exclusion_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open exclusion list: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string id = detail::trim(line);
        if (id.empty() || id[0] == '#') continue;
        out.insert(id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corpus assembly
// ---------------------------------------------------------------------------

namespace detail {

inline std::string find_corpus_image(const std::string& images_dir, const std::string& id) {
    namespace fs = std::filesystem;
    for (const char* ext : {".png", ".ppm", ".pgm"}) {
        fs::path p = fs::path(images_dir) / (id + ext);
        if (fs::exists(p)) return p.string();
    }
    fs::path direct = fs::path(images_dir) / id;
    if (fs::exists(direct) && fs::is_regular_file(direct)) return direct.string();
    throw std::runtime_error("no image for id '" + id + "' under " + images_dir +
                             " (tried .png/.ppm/.pgm)");
}

}  // namespace detail

/// Assembles corpus entries in attribute-table order. Every listed id (not
/// excluded) must have landmarks and an image file; images must all share
/// one shape. With augment_flip, each entry is followed by an `<id>_flip`
/// copy holding the mirrored image and x-reflected landmarks.
inline std::vector<CorpusEntry> load_corpus(const std::string& images_dir,
                                            const std::string& landmarks_csv,
                                            const std::string& attributes_csv,
                                            const std::string& exclusion_path = "",
                                            bool augment_flip = false) {
    AttributeTable attrs = load_attribute_table(attributes_csv);
    std::unordered_map<std::string, LandmarkSet> landmarks = load_landmark_table(landmarks_csv);
    std::set<std::string> excluded;
    if (!exclusion_path.empty()) excluded = load_exclusion_list(exclusion_path);

    std::vector<CorpusEntry> corpus;
    corpus.reserve(attrs.rows.size() * (augment_flip ? 2 : 1));
    for (const auto& [id, scores] : attrs.rows) {
        if (excluded.count(id)) continue;
        auto lm = landmarks.find(id);
        if (lm == landmarks.end())
            throw std::runtime_error("id '" + id + "' has attributes but no landmarks");

        CorpusEntry entry;
        entry.id = id;
        entry.image = load_image(detail::find_corpus_image(images_dir, id));
        entry.landmarks = lm->second;
        for (std::size_t i = 0; i < attrs.names.size(); ++i)
            entry.attributes[attrs.names[i]] = scores[i];

        if (!corpus.empty() && !entry.image.same_shape(corpus.front().image))
            throw std::runtime_error("corpus image shapes differ: '" + corpus.front().id + "' is " +
                                     corpus.front().image.shape_string() + " but '" + id + "' is " +
                                     entry.image.shape_string());

        if (augment_flip) {
            CorpusEntry flipped;
            flipped.id = id + "_flip";
            flipped.image = flip_horizontal(entry.image);
            flipped.landmarks = entry.landmarks.flipped_horizontal(entry.image.width());
            flipped.attributes = entry.attributes;
            corpus.push_back(std::move(entry));
            corpus.push_back(std::move(flipped));
        } else {
            corpus.push_back(std::move(entry));
        }
    }
    if (corpus.empty()) throw std::runtime_error("corpus is empty after exclusions");
    return corpus;
}

// ---------------------------------------------------------------------------
// Writers (used by the demo-data generator and round-trip tests)
// ---------------------------------------------------------------------------

inline void save_attribute_table(const AttributeTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write attribute table: " + path);
    out << "id";
    for (const std::string& name : table.names) out << "," << name;
    out << "\n";
    out.precision(17);
    for (const auto& [id, scores] : table.rows) {
        out << id;
        for (double v : scores) out << "," << v;
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void save_landmark_table(const std::vector<std::pair<std::string, LandmarkSet>>& rows,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write landmark table: " + path);
    out.precision(17);
    for (const auto& [id, lm] : rows) {
        out << id;
        for (int i = 0; i < kLandmarkCount; ++i) out << "," << lm.points[i].x << "," << lm.points[i].y;
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace facegen
