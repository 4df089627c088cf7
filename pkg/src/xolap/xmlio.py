"""Small shared helpers for reading and writing the warehouse XML documents.

All writers in this package go through XmlWriter so that serialization is
deterministic byte-for-byte: two-space indent, attributes in insertion order,
self-closing empty elements, LF line ends, UTF-8.
"""

import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape, quoteattr

from .errors import MalformedXml

XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>'


def parse_xml(text: str, what: str = "document") -> ET.Element:
    """Parse text into an element tree root, mapping parse errors to MalformedXml."""
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(f"{what} is not well-formed XML: {exc}") from None


class XmlWriter:
    """Builds an indented XML document as text."""

    def __init__(self):
        self._lines = [XML_DECLARATION]
        self._stack = []

    def _indent(self) -> str:
        return "  " * len(self._stack)

    @staticmethod
    def _attrs(attrs) -> str:
        return "".join(f" {name}={quoteattr(str(value))}" for name, value in attrs)

    def open(self, tag: str, attrs=()) -> None:
        self._lines.append(f"{self._indent()}<{tag}{self._attrs(attrs)}>")
        self._stack.append(tag)

    def close(self) -> None:
        tag = self._stack.pop()
        self._lines.append(f"{self._indent()}</{tag}>")

    def empty(self, tag: str, attrs=()) -> None:
        self._lines.append(f"{self._indent()}<{tag}{self._attrs(attrs)}/>")

    def leaf(self, tag: str, text: str, attrs=()) -> None:
        self._lines.append(
            f"{self._indent()}<{tag}{self._attrs(attrs)}>{escape(text)}</{tag}>"
        )

    def text(self) -> str:
        assert not self._stack, "unclosed elements"
        return "\n".join(self._lines) + "\n"
