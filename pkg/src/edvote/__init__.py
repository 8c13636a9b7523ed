"""Zero-trust electronic voting backed by voter-side proof of work."""

from .powcore import (
    MiningBudget,
    MiningResult,
    hash_block,
    leading_zero_bits,
    mine,
    total_work,
    verify_work,
    work_estimate,
)
from .model import (
    Acknowledgment,
    ElectionConfig,
    ErrorCode,
    Keypair,
    Mandate,
    PlatformStamp,
    PublishedLists,
    Receipt,
    Submission,
    ValidationError,
    VoteBlock,
    VotedMandate,
    VoterSecret,
)

__version__ = "0.1.0"
