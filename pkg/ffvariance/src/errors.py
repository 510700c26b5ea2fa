#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
errors - ffvariance 共通の例外クラス

オーケストレーターはこの階層を終了コードへ対応付けます。
"""

from typing import Optional


class FFVarianceError(Exception):
    """ffvariance の全例外の基底クラス"""


class PreconditionError(FFVarianceError, ValueError):
    """入力が操作の前提条件を満たさない（終了コード 2）"""


class BudgetExceededError(FFVarianceError):
    """列挙・表のサイズが設定上限を超えた（終了コード 3）"""

    def __init__(self, message: str, required: Optional[int] = None, cap: Optional[int] = None):
        super().__init__(message)
        self.required = required
        self.cap = cap


class VerificationError(FFVarianceError):
    """独立に計算した二つの値が一致しない（実装バグの検出）"""


def check_budget(what: str, required: int, cap: float) -> None:
    """required が cap を超えたら BudgetExceededError を送出"""
    if required > cap:
        raise BudgetExceededError(
            f"{what} requires {required} which exceeds the budget {int(cap)}",
            required=required,
            cap=int(cap),
        )
