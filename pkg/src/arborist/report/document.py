"""A tiny block document model rendered to Markdown or HTML."""

from __future__ import annotations

from dataclasses import dataclass, field
from html import escape
from pathlib import Path


@dataclass
class Document:
    title: str
    blocks: list[tuple] = field(default_factory=list)

    def heading(self, text: str) -> None:
        self.blocks.append(("h2", text))

    def subheading(self, text: str) -> None:
        self.blocks.append(("h3", text))

    def para(self, text: str) -> None:
        self.blocks.append(("p", text))

    def bullets(self, items: list[str]) -> None:
        self.blocks.append(("ul", list(items)))

    def pre(self, text: str) -> None:
        self.blocks.append(("pre", text))

    def table(self, header: list[str], rows: list[list[str]]) -> None:
        self.blocks.append(("table", header, rows))

    def figure(self, name: str, svg: str, caption: str) -> None:
        self.blocks.append(("svg", name, svg, caption))

    @property
    def headings(self) -> list[str]:
        return [b[1] for b in self.blocks if b[0] == "h2"]

    # ---------------------------------------------------------- rendering

    def to_markdown(self, asset_dir: str) -> tuple[str, dict[str, str]]:
        """Markdown text plus ``{relative path: svg}`` for the sidecar assets."""
        out = [f"# {self.title}", ""]
        assets: dict[str, str] = {}
        for b in self.blocks:
            kind = b[0]
            if kind == "h2":
                out += [f"## {b[1]}", ""]
            elif kind == "h3":
                out += [f"### {b[1]}", ""]
            elif kind == "p":
                out += [b[1], ""]
            elif kind == "ul":
                out += [f"- {item}" for item in b[1]] + [""]
            elif kind == "pre":
                out += ["```", b[1], "```", ""]
            elif kind == "table":
                header, rows = b[1], b[2]
                out.append("| " + " | ".join(_md_cell(h) for h in header) + " |")
                out.append("|" + "|".join("---" for _ in header) + "|")
                out += ["| " + " | ".join(_md_cell(c) for c in r) + " |" for r in rows]
                out.append("")
            elif kind == "svg":
                rel = f"{asset_dir}/{b[1]}.svg"
                assets[rel] = b[2]
                out += [f"![{b[3]}]({rel})", "", f"*{b[3]}*", ""]
        return "\n".join(out).rstrip("\n") + "\n", assets

    def to_html(self) -> str:
        out = [
            "<!DOCTYPE html>",
            '<html lang="en">',
            "<head>",
            '<meta charset="utf-8">',
            f"<title>{escape(self.title)}</title>",
            "<style>",
            "body{font-family:sans-serif;max-width:960px;margin:2em auto;padding:0 1em;color:#222}",
            "table{border-collapse:collapse;margin:1em 0}td,th{border:1px solid #ccc;padding:3px 8px;text-align:left}",
            "pre{background:#f6f6f6;padding:8px;overflow-x:auto}figure{margin:1em 0}",
            "</style>",
            "</head>",
            "<body>",
            f"<h1>{escape(self.title)}</h1>",
        ]
        for b in self.blocks:
            kind = b[0]
            if kind in ("h2", "h3"):
                out.append(f"<{kind}>{escape(b[1])}</{kind}>")
            elif kind == "p":
                out.append(f"<p>{escape(b[1])}</p>")
            elif kind == "ul":
                out.append("<ul>" + "".join(f"<li>{escape(i)}</li>" for i in b[1]) + "</ul>")
            elif kind == "pre":
                out.append(f"<pre>{escape(b[1])}</pre>")
            elif kind == "table":
                head = "".join(f"<th>{escape(h)}</th>" for h in b[1])
                body = "".join("<tr>" + "".join(f"<td>{escape(c)}</td>" for c in r) + "</tr>" for r in b[2])
                out.append(f"<table><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table>")
            elif kind == "svg":
                out.append(f"<figure>{b[2].strip()}<figcaption>{escape(b[3])}</figcaption></figure>")
        out += ["</body>", "</html>"]
        return "\n".join(out) + "\n"


def _md_cell(text: str) -> str:
    return str(text).replace("|", "\\|")


def write_document(doc: Document, path: str | Path, fmt: str) -> Path:
    path = Path(path)
    if fmt == "html":
        path.write_text(doc.to_html(), encoding="utf-8")
        return path
    asset_dir = f"{path.stem}_assets"
    text, assets = doc.to_markdown(asset_dir)
    (path.parent / asset_dir).mkdir(parents=True, exist_ok=True)
    for rel, svg in sorted(assets.items()):
        (path.parent / rel).write_text(svg, encoding="utf-8")
    path.write_text(text, encoding="utf-8")
    return path
