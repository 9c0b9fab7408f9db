#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "vmsynth/dsl.hpp"
#include "vmsynth/error.hpp"

namespace vmsynth {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
    std::string s;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) s += i + 1 == expected.size() ? " or " : ", ";
        s += expected[i];
    }
    return s;
}

}  // namespace

ParseError::ParseError(int line, int column, std::vector<std::string> expected, const std::string& found,
                       const std::string& message)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " +
            (message.empty() ? "expected " + join_expected(expected) + ", found " + found : message)),
      line_(line), column_(column), expected_(std::move(expected)) {}

}  // namespace vmsynth

namespace vmsynth::dsl {
namespace {

enum class Tok { ident, string, number, lbrace, rbrace, lbracket, rbracket, lparen, rparen, comma, plus, minus, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    int line = 1;
    int column = 1;
};

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::end: return "end of input";
        case Tok::string: return "string \"" + t.text + "\"";
        case Tok::number: return "number " + t.text;
        case Tok::ident: return "'" + t.text + "'";
        default: return "'" + t.text + "'";
    }
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (ident_start(c)) {
                t.kind = Tok::ident;
                while (pos_ < src_.size() && ident_char(src_[pos_])) t.text += take();
            } else if (c == '"') {
                t.kind = Tok::string;
                take();
                for (;;) {
                    if (pos_ >= src_.size() || src_[pos_] == '\n') {
                        throw ParseError(t.line, t.column, {"'\"'"}, "end of line", "unterminated string");
                    }
                    const char d = take();
                    if (d == '"') break;
                    t.text += d;
                }
            } else if (starts_number()) {
                t.kind = Tok::number;
                if (c == '-' || c == '+') t.text += take();
                while (pos_ < src_.size() && (digit(src_[pos_]) || src_[pos_] == '.')) t.text += take();
                if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                    t.text += take();
                    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) t.text += take();
                    while (pos_ < src_.size() && digit(src_[pos_])) t.text += take();
                }
            } else {
                static constexpr std::pair<char, Tok> punct[] = {
                    {'{', Tok::lbrace},   {'}', Tok::rbrace}, {'[', Tok::lbracket}, {']', Tok::rbracket},
                    {'(', Tok::lparen},   {')', Tok::rparen}, {',', Tok::comma},    {'+', Tok::plus},
                    {'-', Tok::minus},
                };
                bool found = false;
                for (const auto& [ch, kind] : punct) {
                    if (c == ch) {
                        t.kind = kind;
                        t.text = take();
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    throw ParseError(t.line, t.column, {}, {},
                                     std::string("unexpected character '") + c + "'");
                }
            }
            out.push_back(std::move(t));
        }
    }

private:
    char take() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    bool starts_number() const {
        auto at = [&](std::size_t i) { return i < src_.size() ? src_[i] : '\0'; };
        std::size_t i = pos_;
        if (at(i) == '-' || at(i) == '+') ++i;
        return digit(at(i)) || (at(i) == '.' && digit(at(i + 1)));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    ControlProgram program() {
        ControlProgram p;
        std::set<std::string> names;
        while (peek().kind != Tok::end) {
            if (!peek_keyword("stage")) fail({"'stage'", "end of input"});
            const int line = next().line;
            const Token& name = expect(Tok::ident, "stage name");
            if (!names.insert(name.text).second) {
                throw ParseError(name.line, name.column, {}, {}, "duplicate stage name '" + name.text + "'");
            }
            Stage s;
            s.name = name.text;
            s.line = line;
            expect(Tok::lbrace, "'{'");
            while (peek().kind != Tok::rbrace) s.commands.push_back(command());
            next();
            p.stages.push_back(std::move(s));
        }
        return p;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() {
        pending_.clear();
        return toks_[pos_++];
    }

    bool peek_keyword(std::string_view kw) const { return peek().kind == Tok::ident && peek().text == kw; }

    // Optional keyword: consumed when present, otherwise remembered for the
    // expected-token set of the next error.
    bool accept_keyword(std::string_view kw) {
        if (peek_keyword(kw)) {
            next();
            return true;
        }
        pending_.push_back("'" + std::string(kw) + "'");
        return false;
    }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        std::vector<std::string> all = pending_;
        all.insert(all.end(), expected.begin(), expected.end());
        throw ParseError(peek().line, peek().column, all, describe(peek()));
    }

    const Token& expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) fail({what});
        return next();
    }

    void expect_keyword(std::string_view kw) {
        if (!peek_keyword(kw)) fail({"'" + std::string(kw) + "'"});
        next();
    }

    double number(const Token** where = nullptr) {
        const Token& t = expect(Tok::number, "NUMBER");
        if (where) *where = &t;
        double v = 0.0;
        const char* b = t.text.data();
        const char* e = b + t.text.size();
        if (*b == '+') ++b;
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
            throw ParseError(t.line, t.column, {"NUMBER"}, describe(t), "malformed number '" + t.text + "'");
        }
        return v;
    }

    double non_negative(const char* what, bool strictly_positive = false) {
        const Token* t = nullptr;
        const double v = number(&t);
        if (v < 0.0 || (strictly_positive && v == 0.0)) {
            throw ParseError(t->line, t->column, {}, {},
                             std::string(what) + (strictly_positive ? " must be positive" : " must be non-negative"));
        }
        return v;
    }

    Vec3 vec3() {
        expect(Tok::lbracket, "'['");
        Vec3 v;
        v.x() = number();
        expect(Tok::comma, "','");
        v.y() = number();
        expect(Tok::comma, "','");
        v.z() = number();
        expect(Tok::rbracket, "']'");
        return v;
    }

    QuatLiteral quat() {
        expect(Tok::lbracket, "'['");
        QuatLiteral q;
        q.w = number();
        expect(Tok::comma, "','");
        q.x = number();
        expect(Tok::comma, "','");
        q.y = number();
        expect(Tok::comma, "','");
        q.z = number();
        expect(Tok::rbracket, "']'");
        return q;
    }

    PoseExpr pose_expr() {
        if (peek_keyword("k")) {
            next();
            expect(Tok::lbracket, "'['");
            const Token& t = expect(Tok::number, "INTEGER");
            bool integral = !t.text.empty();
            for (char c : t.text) integral &= digit(c);
            if (!integral) throw ParseError(t.line, t.column, {"INTEGER"}, describe(t));
            int index = 0;
            std::from_chars(t.text.data(), t.text.data() + t.text.size(), index);
            if (index < 1) throw ParseError(t.line, t.column, {}, {}, "keypoint index must be at least 1");
            expect(Tok::rbracket, "']'");
            KeypointExpr k{index, {}};
            for (;;) {
                if (peek().kind == Tok::plus || peek().kind == Tok::minus) {
                    const char sign = next().text[0];
                    k.offsets.push_back({sign, vec3()});
                } else {
                    pending_.push_back("'+'");
                    pending_.push_back("'-'");
                    break;
                }
            }
            return k;
        }
        if (peek_keyword("pose")) {
            next();
            expect(Tok::lparen, "'('");
            LiteralPose p;
            p.position = vec3();
            expect(Tok::comma, "','");
            p.rotation = quat();
            expect(Tok::rparen, "')'");
            return p;
        }
        fail({"'k'", "'pose'"});
    }

    RotDirective rot() {
        if (peek_keyword("keep")) {
            next();
            return RotKeep{};
        }
        if (peek_keyword("face-down")) {
            next();
            return RotFaceDown{};
        }
        if (peek().kind == Tok::lbracket) return quat();
        fail({"'keep'", "'face-down'", "'['"});
    }

    Command command() {
        if (peek_keyword("move")) {
            next();
            expect_keyword("to");
            Move m;
            m.target = pose_expr();
            if (accept_keyword("rot")) m.rot = rot();
            if (accept_keyword("speed")) m.speed = non_negative("speed", true);
            return m;
        }
        if (peek_keyword("grasp")) {
            next();
            Grasp g;
            g.object = expect(Tok::string, "STRING").text;
            if (accept_keyword("width")) {
                if (peek_keyword("auto")) next();
                else if (peek().kind == Tok::number) g.width = non_negative("width");
                else fail({"'auto'", "NUMBER"});
            }
            if (accept_keyword("approach")) g.approach = vec3();
            return g;
        }
        if (peek_keyword("release")) {
            next();
            Release r;
            if (accept_keyword("retreat")) r.retreat = vec3();
            return r;
        }
        if (peek_keyword("wait")) {
            next();
            return Wait{non_negative("duration")};
        }
        fail({"'move'", "'grasp'", "'release'", "'wait'", "'}'"});
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<std::string> pending_;
};

}  // namespace

ControlProgram parse_program(std::string_view text) {
    Parser parser(Lexer(text).run());
    return parser.program();
}

}  // namespace vmsynth::dsl
