"""Keyword/location query matching for extracting disaster-relevant messages.

Queries are boolean expressions over case-insensitive terms and quoted
phrases (precedence NOT > AND > OR, parentheses allowed). Matching is
word-boundary aware on the raw tweet text: a literal matches when its
token sequence occurs contiguously in the tweet's token sequence, so
"aid" never matches inside "said".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

from .corpus import Tweet, TweetCollection
from .preprocess import tokenize


class QuerySyntaxError(Exception):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class QueryError(Exception):
    """Semantically invalid query (e.g. no positive literal)."""


@dataclass(frozen=True)
class Literal:
    """A term or phrase; stored as its lowercased token sequence."""

    tokens: tuple[str, ...]
    phrase: bool = False

    def __post_init__(self):
        if not self.tokens:
            raise QueryError("literal has no searchable content")


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Node", ...]


Node = Union[Literal, Not, And, Or]


@dataclass(frozen=True)
class Query:
    root: Node
    source_tag: str | None = None

    def __post_init__(self):
        if not _has_positive_literal(self.root, positive=True):
            raise QueryError("query must contain at least one non-negated term")


def _has_positive_literal(node: Node, positive: bool) -> bool:
    if isinstance(node, Literal):
        return positive
    if isinstance(node, Not):
        return _has_positive_literal(node.child, not positive)
    return any(_has_positive_literal(c, positive) for c in node.children)


# --- parsing ---------------------------------------------------------------

_KEYWORDS = {"AND", "OR", "NOT"}


@dataclass
class _Token:
    kind: str  # 'word', 'phrase', '(', ')'
    value: str
    pos: int


def _lex(s: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
        elif c in "()":
            tokens.append(_Token(c, c, i))
            i += 1
        elif c == '"':
            j = s.find('"', i + 1)
            if j < 0:
                raise QuerySyntaxError("unterminated phrase", i)
            tokens.append(_Token("phrase", s[i + 1 : j], i))
            i = j + 1
        else:
            j = i
            while j < n and not s[j].isspace() and s[j] not in '()"':
                j += 1
            tokens.append(_Token("word", s[i:j], i))
            i = j
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], source_len: int):
        self.tokens = tokens
        self.i = 0
        self.source_len = source_len

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token | None:
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def parse(self) -> Node:
        if not self.tokens:
            raise QuerySyntaxError("empty query", 0)
        node = self.parse_or()
        trailing = self.peek()
        if trailing is not None:
            raise QuerySyntaxError(f"unexpected {trailing.value!r}", trailing.pos)
        return node

    def parse_or(self) -> Node:
        children = [self.parse_and()]
        while self._take_keyword("OR"):
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self) -> Node:
        children = [self.parse_not()]
        while self._take_keyword("AND"):
            children.append(self.parse_not())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_not(self) -> Node:
        if self._take_keyword("NOT"):
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> Node:
        tok = self.next()
        if tok is None:
            raise QuerySyntaxError("expected a term", self.source_len)
        if tok.kind == "(":
            node = self.parse_or()
            closing = self.next()
            if closing is None or closing.kind != ")":
                raise QuerySyntaxError("expected ')'", closing.pos if closing else self.source_len)
            return node
        if tok.kind == "phrase":
            return _make_literal(tok.value, phrase=True, pos=tok.pos)
        if tok.kind == "word":
            if tok.value.upper() in _KEYWORDS:
                raise QuerySyntaxError(f"unexpected keyword {tok.value!r}", tok.pos)
            return _make_literal(tok.value, phrase=False, pos=tok.pos)
        raise QuerySyntaxError(f"unexpected {tok.value!r}", tok.pos)

    def _take_keyword(self, kw: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind == "word" and tok.value.upper() == kw:
            self.i += 1
            return True
        return False


def _make_literal(raw: str, phrase: bool, pos: int) -> Literal:
    tokens = tuple(t.lower() for t in tokenize(raw))
    if not tokens:
        raise QuerySyntaxError(f"term {raw!r} has no searchable content", pos)
    return Literal(tokens=tokens, phrase=phrase or len(tokens) > 1)


def parse_query(s: str, source_tag: str | None = None) -> Query:
    """Parse a query string; AND/OR/NOT are recognized case-insensitively.

    To search for those words themselves, quote them as phrases.
    """
    return Query(_Parser(_lex(s), len(s)).parse(), source_tag=source_tag)


def print_query(q: Query | Node) -> str:
    """Canonical text form; ``parse_query(print_query(q))`` rebuilds ``q``."""
    node = q.root if isinstance(q, Query) else q
    return _print_node(node)


def _print_node(node: Node) -> str:
    if isinstance(node, Literal):
        if node.phrase or len(node.tokens) > 1 or node.tokens[0].upper() in _KEYWORDS:
            return '"' + " ".join(node.tokens) + '"'
        return node.tokens[0]
    if isinstance(node, Not):
        inner = _print_node(node.child)
        if isinstance(node.child, (And, Or)):
            inner = f"({inner})"
        return f"NOT {inner}"
    if isinstance(node, And):
        parts = [
            f"({_print_node(c)})" if isinstance(c, (And, Or)) else _print_node(c)
            for c in node.children
        ]
        return " AND ".join(parts)
    parts = [
        f"({_print_node(c)})" if isinstance(c, Or) else _print_node(c)
        for c in node.children
    ]
    return " OR ".join(parts)


# --- matching --------------------------------------------------------------


def _contains_run(haystack: list[str], needle: tuple[str, ...]) -> bool:
    k = len(needle)
    if k == 0:
        return False
    if k == 1:
        return needle[0] in haystack
    limit = len(haystack) - k
    first = needle[0]
    for i in range(limit + 1):
        if haystack[i] == first and tuple(haystack[i : i + k]) == needle:
            return True
    return False


def _eval(node: Node, words: list[str]) -> bool:
    if isinstance(node, Literal):
        return _contains_run(words, node.tokens)
    if isinstance(node, Not):
        return not _eval(node.child, words)
    if isinstance(node, And):
        return all(_eval(c, words) for c in node.children)
    return any(_eval(c, words) for c in node.children)


def match(q: Query, t: Tweet | str) -> bool:
    """True when the query holds on the tweet's raw, lowercased text."""
    text = t.text if isinstance(t, Tweet) else t
    words = [w.lower() for w in tokenize(text)]
    return _eval(q.root if isinstance(q, Query) else q, words)


@dataclass
class FilterResult:
    kept: TweetCollection
    hits_per_query: list[int] = field(default_factory=list)


def filter_corpus(queries: list[Query], c: TweetCollection) -> FilterResult:
    """Keep tweets matching at least one query, preserving input order.

    Hit counts are per query over the whole input, independent of whether
    another query already retained the tweet.
    """
    hits = [0] * len(queries)
    kept: list[Tweet] = []
    for tweet in c:
        words = [w.lower() for w in tokenize(tweet.text)]
        any_hit = False
        for qi, q in enumerate(queries):
            if _eval(q.root, words):
                hits[qi] += 1
                any_hit = True
        if any_hit:
            kept.append(tweet)
    return FilterResult(TweetCollection(tuple(kept)), hits)


def filter_by_time(c: TweetCollection, since: str | None = None, until: str | None = None) -> TweetCollection:
    """Keep tweets with ``since <= created_at <= until`` (ISO-8601 strings
    compare lexicographically). Tweets without a timestamp are dropped when
    either bound is set.
    """
    if since is None and until is None:
        return c
    kept = []
    for t in c:
        if t.created_at is None:
            continue
        if since is not None and t.created_at < since:
            continue
        if until is not None and t.created_at > until:
            continue
        kept.append(t)
    return TweetCollection(tuple(kept))


# --- lexicons --------------------------------------------------------------


def load_lexicon(path: str | Path, source_tag: str | None = None) -> Query:
    """One term or phrase per line, '#' comments; the result is one big OR."""
    path = Path(path)
    literals: list[Node] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = tuple(t.lower() for t in tokenize(line))
            if not tokens:
                continue
            literals.append(Literal(tokens=tokens, phrase=len(tokens) > 1))
    if not literals:
        raise QueryError(f"lexicon {path} contains no usable terms")
    root: Node = literals[0] if len(literals) == 1 else Or(tuple(literals))
    return Query(root, source_tag=source_tag or path.stem)


def combine_queries(keyword_query: Query, location_query: Query | None, mode: str = "and") -> Query:
    """Combine a keyword lexicon with location terms.

    ``and`` requires both a keyword and a location hit; ``or`` accepts
    either.
    """
    if location_query is None:
        return keyword_query
    if mode == "and":
        root: Node = And((keyword_query.root, location_query.root))
    elif mode == "or":
        root = Or((keyword_query.root, location_query.root))
    else:
        raise QueryError(f"unknown combine mode {mode!r} (expected 'and' or 'or')")
    tag = "+".join(x for x in (keyword_query.source_tag, location_query.source_tag) if x)
    return Query(root, source_tag=tag or None)
