#include "entmark/wikitext.hpp"

#include "entmark/utf8.hpp"

#include <algorithm>
#include <cctype>

namespace entmark::wikitext {

namespace {

bool is_hex(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return c - 'A' + 10;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && is_hex(s[i + 1]) && is_hex(s[i + 2])) {
            out.push_back(static_cast<char>(hex_val(s[i + 1]) * 16 + hex_val(s[i + 2])));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

// Strips scheme/host from href values; "/wiki/Buffalo_Bills" -> "Buffalo_Bills".
std::string href_to_title(std::string_view href) {
    auto wiki = href.rfind("/wiki/");
    if (wiki != std::string_view::npos) return std::string(href.substr(wiki + 6));
    if (!href.empty() && href.front() == '/') return std::string(href.substr(1));
    return std::string(href);
}

// Emitter that tracks the code point length of the clean text as it grows.
struct CleanText {
    std::string text;
    int64_t cp_len = 0;

    void append(std::string_view s) {
        text.append(s);
        cp_len += static_cast<int64_t>(utf8::cp_count(s));
    }
};

// Parses the attributes of an <a ...> tag and returns the href value.
std::string parse_href(std::string_view tag_body) {
    auto pos = tag_body.find("href");
    if (pos == std::string_view::npos) return {};
    pos = tag_body.find('=', pos);
    if (pos == std::string_view::npos) return {};
    ++pos;
    while (pos < tag_body.size() && utf8::is_space(tag_body[pos])) ++pos;
    if (pos >= tag_body.size()) return {};
    char quote = tag_body[pos];
    if (quote == '"' || quote == '\'') {
        auto close = tag_body.find(quote, pos + 1);
        if (close == std::string_view::npos) return {};
        return std::string(tag_body.substr(pos + 1, close - pos - 1));
    }
    auto end = pos;
    while (end < tag_body.size() && !utf8::is_space(tag_body[end])) ++end;
    return std::string(tag_body.substr(pos, end - pos));
}

} // namespace

ExtractResult extract_hyperlinks(std::string_view raw) {
    ExtractResult result;
    CleanText clean;
    size_t pos = 0;

    auto emit_link = [&](std::string_view anchor, std::string target) {
        if (anchor.empty()) {
            result.warnings.push_back("empty anchor for target \"" + target + "\"");
            return;
        }
        int64_t start = clean.cp_len;
        clean.append(anchor);
        result.links.push_back({start, clean.cp_len, std::string(anchor), std::move(target)});
    };

    while (pos < raw.size()) {
        if (raw.compare(pos, 2, "[[") == 0) {
            // Scan the body; an inner "[[" wins, the outer brackets become text.
            size_t body = pos + 2;
            size_t scan = body;
            size_t close = std::string_view::npos;
            bool inner = false;
            while (scan + 1 < raw.size()) {
                if (raw.compare(scan, 2, "]]") == 0) {
                    close = scan;
                    break;
                }
                if (raw.compare(scan, 2, "[[") == 0) {
                    inner = true;
                    close = scan;
                    break;
                }
                ++scan;
            }
            if (close == std::string_view::npos) {
                result.warnings.push_back("unclosed [[ at byte " + std::to_string(pos));
                clean.append(raw.substr(pos, 2));
                pos += 2;
                continue;
            }
            if (inner) {
                clean.append(raw.substr(pos, close - pos));
                pos = close;
                continue;
            }
            std::string_view link_body = raw.substr(body, close - body);
            auto pipe = link_body.find('|');
            std::string_view target = pipe == std::string_view::npos ? link_body
                                                                     : link_body.substr(0, pipe);
            std::string_view anchor = pipe == std::string_view::npos ? link_body
                                                                     : link_body.substr(pipe + 1);
            if (target.empty() || target.find('\n') != std::string_view::npos) {
                result.warnings.push_back("malformed link body \"" + std::string(link_body) + "\"");
                clean.append(raw.substr(pos, close + 2 - pos));
            } else {
                emit_link(anchor, std::string(target));
            }
            pos = close + 2;
            continue;
        }
        if (raw.compare(pos, 2, "<a") == 0 &&
            (pos + 2 >= raw.size() || utf8::is_space(raw[pos + 2]) || raw[pos + 2] == '>')) {
            auto tag_end = raw.find('>', pos);
            if (tag_end == std::string_view::npos) {
                result.warnings.push_back("unclosed <a tag at byte " + std::to_string(pos));
                clean.append(raw.substr(pos, 2));
                pos += 2;
                continue;
            }
            std::string href = parse_href(raw.substr(pos + 2, tag_end - pos - 2));
            size_t anchor_start = tag_end + 1;
            size_t scan = anchor_start;
            size_t close = std::string_view::npos;
            bool inner = false;
            while (scan < raw.size()) {
                if (raw.compare(scan, 4, "</a>") == 0) {
                    close = scan;
                    break;
                }
                if (raw.compare(scan, 2, "<a") == 0 &&
                    (scan + 2 >= raw.size() || utf8::is_space(raw[scan + 2]) || raw[scan + 2] == '>')) {
                    inner = true;
                    close = scan;
                    break;
                }
                ++scan;
            }
            if (close == std::string_view::npos) {
                result.warnings.push_back("unclosed <a> at byte " + std::to_string(pos));
                clean.append(raw.substr(pos, anchor_start - pos));
                pos = anchor_start;
                continue;
            }
            if (inner) {
                clean.append(raw.substr(pos, close - pos));
                pos = close;
                continue;
            }
            std::string_view anchor = raw.substr(anchor_start, close - anchor_start);
            if (href.empty()) {
                result.warnings.push_back("anchor without href: \"" + std::string(anchor) + "\"");
                clean.append(anchor);
            } else {
                emit_link(anchor, href_to_title(href));
            }
            pos = close + 4;
            continue;
        }
        // Plain text: copy a whole UTF-8 sequence through.
        size_t n = utf8::seq_len(raw, pos);
        clean.append(raw.substr(pos, n));
        pos += n;
    }

    result.clean_text = std::move(clean.text);
    return result;
}

std::string normalize_title(std::string_view title) {
    std::string decoded = percent_decode(title);
    auto hash = decoded.find('#');
    if (hash != std::string::npos) decoded.resize(hash);

    std::string out;
    out.reserve(decoded.size());
    bool pending_space = false;
    for (char c : decoded) {
        if (utf8::is_space(c) || c == '_') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    if (!out.empty() && out[0] >= 'A' && out[0] <= 'Z')
        out[0] = static_cast<char>(out[0] - 'A' + 'a');
    return out;
}

ResolveResult resolve_links(const std::vector<ExtractedLink>& links, const TitleQidMap& map) {
    ResolveResult result;
    for (const auto& link : links) {
        const std::string* qid = map.resolve(link.target);
        if (!qid) {
            result.unresolved.push_back({link.target, link.start, link.end});
            continue;
        }
        Mention m;
        m.span = {link.start, link.end, link.anchor};
        CandidateScore cand;
        cand.qid = *qid;
        cand.h = 1.0f;
        cand.sources = kSourceHyperlink;
        m.candidates.push_back(std::move(cand));
        result.mentions.push_back(std::move(m));
    }
    return result;
}

} // namespace entmark::wikitext
