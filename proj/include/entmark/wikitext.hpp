#pragma once
// Hyperlink extraction from wiki markup. Understands [[Target]],
// [[Target|anchor]] and <a href="...">anchor</a>; everything else passes
// through verbatim. Link spans are code point offsets into the clean text.

#include "entmark/corpus.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace entmark::wikitext {

struct ExtractedLink {
    int64_t start = 0;   // span in clean text, end-exclusive, code points
    int64_t end = 0;
    std::string anchor;  // rendered text, equals clean_text[start:end]
    std::string target;  // raw link target before normalization
    bool operator==(const ExtractedLink&) const = default;
};

struct ExtractResult {
    std::string clean_text;
    std::vector<ExtractedLink> links;
    std::vector<std::string> warnings;  // unclosed/malformed fragments, kept as text
};

ExtractResult extract_hyperlinks(std::string_view raw_markup);

// Wikipedia-style title normalization: percent-decode, strip "#section",
// collapse whitespace/underscore runs to single spaces, trim, lower-case the
// first character only.
std::string normalize_title(std::string_view title);

class TitleQidMap {
public:
    TitleQidMap() = default;
    explicit TitleQidMap(const std::map<std::string, std::string>& title_to_qid) {
        for (const auto& [title, qid] : title_to_qid) insert(title, qid);
    }

    void insert(std::string_view title, std::string qid) {
        entries_[normalize_title(title)] = std::move(qid);
    }
    const std::string* resolve(std::string_view title) const {
        auto it = entries_.find(normalize_title(title));
        return it == entries_.end() ? nullptr : &it->second;
    }
    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string> entries_;  // normalized title -> qid
};

struct UnresolvedLink {
    std::string target;
    int64_t start = 0;
    int64_t end = 0;
};

struct ResolveResult {
    std::vector<Mention> mentions;           // single candidate each, h = 1
    std::vector<UnresolvedLink> unresolved;  // targets missing from the map
};

ResolveResult resolve_links(const std::vector<ExtractedLink>& links, const TitleQidMap& map);

} // namespace entmark::wikitext
