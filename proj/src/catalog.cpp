#include "priceaudit/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace priceaudit {

using nlohmann::json;

void validate_product(const Product& product) {
    if (product.id.empty())
        throw CatalogError("product id must be nonempty");
    if (product.title.empty())
        throw CatalogError("product '" + product.id + "': title must be nonempty");
    if (!(product.price > 0.0) || !std::isfinite(product.price))
        throw CatalogError("product '" + product.id + "': price must be positive");
    if (product.unit_price && (!(*product.unit_price > 0.0) || !std::isfinite(*product.unit_price)))
        throw CatalogError("product '" + product.id + "': unit_price must be positive");
    if (product.embedding) {
        double norm_sq = 0.0;
        for (double v : *product.embedding) {
            if (!std::isfinite(v))
                throw CatalogError("product '" + product.id + "': embedding has non-finite entry");
            norm_sq += v * v;
        }
        if (product.embedding->empty() || norm_sq == 0.0)
            throw CatalogError("product '" + product.id + "': embedding must have nonzero norm");
    }
}

void Catalog::add(Product product) {
    validate_product(product);
    if (index_.count(product.id))
        throw CatalogError("duplicate product id '" + product.id + "'");
    if (product.embedding) {
        if (embedding_dim_ && product.embedding->size() != *embedding_dim_) {
            throw CatalogError("product '" + product.id + "': embedding dimension " +
                               std::to_string(product.embedding->size()) +
                               " does not match catalog dimension " +
                               std::to_string(*embedding_dim_));
        }
        embedding_dim_ = product.embedding->size();
    }
    index_.emplace(product.id, products_.size());
    products_.push_back(std::move(product));
}

const Product* Catalog::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &products_[it->second];
}

const Product& Catalog::at(const std::string& id) const {
    const Product* p = find(id);
    if (!p)
        throw CatalogError("unknown product id '" + id + "'");
    return *p;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "id", "title", "category", "price", "unit_price", "attributes", "embedding"};

Product parse_record(const json& record, std::size_t line_no) {
    auto fail = [line_no](const std::string& what) -> CatalogError {
        return CatalogError("line " + std::to_string(line_no) + ": " + what);
    };
    if (!record.is_object())
        throw fail("record is not a JSON object");

    Product product;
    try {
        product.id = record.at("id").get<std::string>();
        product.title = record.at("title").get<std::string>();
        product.category = record.value("category", std::string{});
        product.price = record.at("price").get<double>();
        if (record.contains("unit_price"))
            product.unit_price = record.at("unit_price").get<double>();
        if (record.contains("attributes")) {
            if (!record.at("attributes").is_object())
                throw fail("attributes must be a string-to-string map");
            for (const auto& [name, value] : record.at("attributes").items()) {
                if (value.is_string())
                    product.attributes[name] = value.get<std::string>();
                else
                    product.attributes[name] = value.dump();
            }
        }
        if (record.contains("embedding")) {
            std::vector<double> vec;
            for (const auto& v : record.at("embedding")) {
                if (!v.is_number())
                    throw fail("embedding entries must be numbers");
                vec.push_back(v.get<double>());
            }
            product.embedding = std::move(vec);
        }
    } catch (const json::exception& e) {
        throw fail(std::string("malformed record: ") + e.what());
    }
    return product;
}

} // namespace

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CatalogError("cannot open catalog file '" + path + "'");

    Catalog catalog;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Skip blank lines so hand-edited files stay loadable.
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CatalogError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        Product product = parse_record(record, line_no);
        for (const auto& [key, value] : record.items()) {
            (void)value;
            if (!kKnownKeys.count(key))
                catalog.add_warning("line " + std::to_string(line_no) + ": ignoring unknown key '" + key + "'");
        }
        try {
            catalog.add(std::move(product));
        } catch (const CatalogError& e) {
            throw CatalogError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return catalog;
}

std::vector<std::string> tokenize_title(const std::string& title) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : title) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

namespace {

// FNV-1a 64-bit: fixed constants keep vectors stable across builds and
// platforms, unlike std::hash.
std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::vector<double> fallback_featurize(const Product& product, std::size_t dim) {
    if (dim < 8)
        throw CatalogError("fallback featurizer dimension must be >= 8, got " + std::to_string(dim));
    const std::vector<std::string> tokens = tokenize_title(product.title);
    if (tokens.empty())
        throw CatalogError("product '" + product.id + "': title has no tokens to featurize");

    std::vector<double> vec(dim, 0.0);
    for (const auto& token : tokens)
        vec[fnv1a64(token) % dim] += 1.0;

    double norm = 0.0;
    for (double v : vec)
        norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : vec)
        v /= norm;
    return vec;
}

Catalog with_fallback_embeddings(const Catalog& catalog, std::size_t dim) {
    const std::size_t effective_dim = catalog.embedding_dim().value_or(dim);
    Catalog out;
    for (const Product& product : catalog.products()) {
        Product copy = product;
        if (!copy.embedding)
            copy.embedding = fallback_featurize(product, effective_dim);
        out.add(std::move(copy));
    }
    for (const auto& w : catalog.warnings())
        out.add_warning(w);
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw CatalogError("cosine: dimension mismatch (" + std::to_string(a.size()) +
                           " vs " + std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw CatalogError("cosine: zero-norm input");
    double value = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(value, -1.0, 1.0);
}

std::vector<NeighborCandidate> knn_neighbors(const Catalog& catalog,
                                             const std::string& target_id,
                                             int k) {
    const Product& target = catalog.at(target_id);
    if (k <= 0)
        throw CatalogError("knn_neighbors: k must be positive");
    if (!target.embedding)
        throw CatalogError("knn_neighbors: target '" + target_id + "' has no embedding");

    std::vector<NeighborCandidate> scored;
    scored.reserve(catalog.size());
    for (const Product& p : catalog.products()) {
        if (p.id == target_id)
            continue;
        if (!p.embedding)
            throw CatalogError("knn_neighbors: product '" + p.id + "' has no embedding");
        scored.push_back({p.id, cosine(*target.embedding, *p.embedding), 0});
    }

    std::sort(scored.begin(), scored.end(), [](const NeighborCandidate& a, const NeighborCandidate& b) {
        if (a.similarity != b.similarity)
            return a.similarity > b.similarity;
        return a.product_id < b.product_id;
    });

    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    scored.resize(top);
    for (std::size_t i = 0; i < scored.size(); ++i)
        scored[i].rank = static_cast<int>(i) + 1;
    return scored;
}

} // namespace priceaudit
