"""Fixed-capacity episodic memory with reservoir insertion.

Entries hold the raw (pre-augmentation) image, its label, and an optional
aux payload (stored logits for the dark-replay baseline). Insertion follows
the classic streaming reservoir rule, so after N >= capacity insertions
every seen item is retained with probability capacity/N. Retrieval samples
uniformly with replacement.
"""

import io

import numpy as np

from .errors import EmptyBufferError


class BufferEntry:
    __slots__ = ("image", "label", "aux")

    def __init__(self, image, label, aux=None):
        self.image = image
        self.label = int(label)
        self.aux = aux


class ReservoirBuffer:
    def __init__(self, capacity, seed=0):
        self.capacity = int(capacity)
        self.seen_count = 0
        self.entries = []
        self.rng = np.random.default_rng(seed)

    def __len__(self):
        return len(self.entries)

    def is_empty(self):
        return not self.entries

    def insert(self, image, label, aux=None):
        """Reservoir insert; seen_count grows unconditionally."""
        if len(self.entries) < self.capacity:
            self.entries.append(BufferEntry(np.array(image, copy=True), label, aux))
        else:
            slot = int(self.rng.integers(0, self.seen_count + 1))
            if slot < self.capacity:
                self.entries[slot] = BufferEntry(np.array(image, copy=True), label, aux)
        self.seen_count += 1

    def sample(self, n):
        """Draw n entries uniformly with replacement; images are copies."""
        if not self.entries:
            raise EmptyBufferError("cannot sample from an empty buffer")
        idx = self.rng.integers(0, len(self.entries), size=n)
        return [self.entries[i] for i in idx]

    def sample_arrays(self, n):
        """Like sample() but stacked: (images, labels, aux list)."""
        entries = self.sample(n)
        images = np.stack([e.image for e in entries])
        labels = np.array([e.label for e in entries], dtype=np.int64)
        aux = [e.aux for e in entries]
        return images, labels, aux

    def snapshot(self):
        """Serialize to bytes; round-trips exactly, including the rng state."""
        buf = io.BytesIO()
        n = len(self.entries)
        arrays = {}
        if n:
            arrays["images"] = np.stack([e.image for e in self.entries])
            arrays["labels"] = np.array([e.label for e in self.entries], dtype=np.int64)
            has_aux = np.array([e.aux is not None for e in self.entries])
            arrays["has_aux"] = has_aux
            if has_aux.any():
                template = next(e.aux for e in self.entries if e.aux is not None)
                arrays["aux"] = np.stack([
                    e.aux if e.aux is not None else np.zeros_like(template)
                    for e in self.entries
                ])
        np.savez(
            buf,
            capacity=np.int64(self.capacity),
            seen_count=np.int64(self.seen_count),
            rng_state=np.frombuffer(repr(self.rng.bit_generator.state).encode(), dtype=np.uint8),
            **arrays,
        )
        return buf.getvalue()

    @classmethod
    def restore(cls, blob):
        import ast

        with np.load(io.BytesIO(blob)) as data:
            out = cls(int(data["capacity"]))
            out.seen_count = int(data["seen_count"])
            out.rng.bit_generator.state = ast.literal_eval(bytes(data["rng_state"]).decode())
            if "images" in data:
                images = data["images"]
                labels = data["labels"]
                has_aux = data["has_aux"]
                aux = data["aux"] if has_aux.any() else None
                for i in range(len(labels)):
                    a = aux[i].copy() if (aux is not None and has_aux[i]) else None
                    out.entries.append(BufferEntry(images[i].copy(), labels[i], a))
        return out
