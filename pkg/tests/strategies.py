"""Hypothesis strategies producing well-formed protocol values."""

from hypothesis import strategies as st

from edvote.model import (
    Acknowledgment,
    Mandate,
    PlatformStamp,
    PublishedLists,
    Receipt,
    Submission,
    VotedMandate,
    VoteBlock,
)


def octets(n):
    return st.binary(min_size=n, max_size=n)


mandates = st.builds(Mandate, octets(32), octets(16), octets(64))
stamps = st.builds(PlatformStamp, octets(16), st.integers(0, 2**32 - 1), octets(16), octets(64))
votes = st.text(
    st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
)
blocks = st.builds(
    VoteBlock, votes, st.builds(Receipt, stamps, octets(32)), st.integers(0, 2**64 - 1)
)
submissions = st.builds(Submission, mandates, blocks)
acks = st.builds(Acknowledgment, octets(32), octets(64))
voted = st.builds(VotedMandate, octets(32), octets(64))
published = st.builds(
    PublishedLists,
    st.lists(voted, max_size=4),
    st.lists(blocks, max_size=4),
    st.none() | st.integers(0, 1000),
)
