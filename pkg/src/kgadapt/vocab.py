"""Token vocabulary with reserved special-token ids at fixed indices."""

from __future__ import annotations

from dataclasses import dataclass, field

PAD, UNK, CLS, SEP, PLC = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[PLC]"
SPECIALS = (PAD, UNK, CLS, SEP, PLC)

PAD_ID, UNK_ID, CLS_ID, SEP_ID, PLC_ID = range(5)


@dataclass
class Vocabulary:
    token_to_id: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.token_to_id:
            self.token_to_id = {tok: i for i, tok in enumerate(SPECIALS)}

    @classmethod
    def build(cls, token_iterables) -> "Vocabulary":
        tokens = sorted({t for toks in token_iterables for t in toks}
                        - set(SPECIALS))
        mapping = {tok: i for i, tok in enumerate(SPECIALS)}
        for tok in tokens:
            mapping[tok] = len(mapping)
        return cls(token_to_id=mapping)

    def __len__(self) -> int:
        return len(self.token_to_id)

    def encode(self, tokens) -> list[int]:
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def to_list(self) -> list[str]:
        return [tok for tok, _ in sorted(self.token_to_id.items(),
                                         key=lambda kv: kv[1])]

    @classmethod
    def from_list(cls, tokens) -> "Vocabulary":
        if tuple(tokens[:5]) != SPECIALS:
            raise ValueError("vocabulary list must start with the special tokens")
        return cls(token_to_id={tok: i for i, tok in enumerate(tokens)})
