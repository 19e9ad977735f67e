#ifndef NEGO_NGT_HPP
#define NEGO_NGT_HPP

#include <string>
#include <vector>

#include "nego/data.hpp"
#include "nego/model.hpp"

namespace nego {

struct ParseError {
    int line;  // 1-based; 0 when the error is not tied to a line
    std::string message;
};

struct ParsedNgt {
    DataNegotiation data;  // base always present; labels empty for plain files
    bool has_labels = false;

    const Negotiation& negotiation() const { return data.base; }
};

struct NgtResult {
    std::optional<ParsedNgt> parsed;
    std::vector<ParseError> errors;
    bool ok() const { return parsed.has_value(); }
};

NgtResult parse_ngt(const std::string& text);
NgtResult parse_ngt_file(const std::string& path);

std::string emit_ngt(const Negotiation& neg);
std::string emit_ngt(const DataNegotiation& dneg);

std::string format_errors(const std::vector<ParseError>& errors);

}  // namespace nego

#endif
