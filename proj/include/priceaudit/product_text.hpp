#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "priceaudit/product.hpp"

namespace priceaudit {

// User messages sent to the chat backend carry products in a fixed textual
// block format, e.g.
//
//   TARGET PRODUCT:
//   id: p1
//   title: Vortex 600 kitchen blender
//   category: kitchen-blenders
//   price: 59.99
//   unit_price: 59.99
//   attributes:
//     brand: Vortex
//     wattage: 600
//
// Products without attributes render "attributes: none"; unit_price is
// omitted when absent. The deterministic mock backend parses this format
// back, so renderer and parser below are the two halves of one wire
// contract.

/// Renders one product block under the given heading ("TARGET PRODUCT" etc.).
std::string render_product_block(const std::string& heading, const Product& product);

/// Parses the block following `heading` back into a JSON object with keys
/// id, title, category, price, unit_price (optional) and attributes.
/// Returns a null json when the heading is absent.
nlohmann::json parse_product_block(const std::string& text, const std::string& heading);

/// Fixed-precision price rendering used in prompts (two decimals).
std::string format_price(double value);

} // namespace priceaudit
