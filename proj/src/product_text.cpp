#include "priceaudit/product_text.hpp"

#include <cstdio>
#include <sstream>

namespace priceaudit {

using nlohmann::json;

std::string format_price(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

namespace {

// Newlines inside values would break the line-oriented block format.
std::string flatten(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == '\n' || c == '\r')
            c = ' ';
    return out;
}

} // namespace

std::string render_product_block(const std::string& heading, const Product& product) {
    std::ostringstream out;
    out << heading << ":\n";
    out << "id: " << flatten(product.id) << "\n";
    out << "title: " << flatten(product.title) << "\n";
    out << "category: " << flatten(product.category) << "\n";
    out << "price: " << format_price(product.price) << "\n";
    if (product.unit_price)
        out << "unit_price: " << format_price(*product.unit_price) << "\n";
    if (product.attributes.empty()) {
        out << "attributes: none\n";
    } else {
        out << "attributes:\n";
        for (const auto& [name, value] : product.attributes)
            out << "  " << flatten(name) << ": " << flatten(value) << "\n";
    }
    return out.str();
}

nlohmann::json parse_product_block(const std::string& text, const std::string& heading) {
    const std::string marker = heading + ":";
    std::size_t pos = text.find(marker);
    if (pos == std::string::npos)
        return json();

    json product = json::object();
    json attributes = json::object();
    bool in_attributes = false;

    // Fields start on the line after the heading.
    std::size_t body = text.find('\n', pos);
    if (body == std::string::npos)
        return product;
    std::istringstream lines(text.substr(body + 1));
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            break; // blank line ends the block
        if (in_attributes && line.rfind("  ", 0) == 0) {
            std::size_t colon = line.find(':', 2);
            if (colon != std::string::npos) {
                std::string name = line.substr(2, colon - 2);
                std::string value = line.substr(colon + 1);
                if (!value.empty() && value.front() == ' ')
                    value.erase(0, 1);
                attributes[name] = value;
            }
            continue;
        }
        in_attributes = false;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            break; // not a field line: next section reached
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ')
            value.erase(0, 1);
        if (key == "attributes") {
            // "attributes: none" carries no block; a bare "attributes:"
            // line is followed by indented name/value pairs.
            in_attributes = value.empty();
        } else if (key == "price" || key == "unit_price") {
            try {
                product[key] = std::stod(value);
            } catch (...) {
                product[key] = value;
            }
        } else if (key == "id" || key == "title" || key == "category") {
            product[key] = value;
        } else {
            break; // unknown top-level line: block over
        }
    }
    product["attributes"] = attributes;
    return product;
}

} // namespace priceaudit
