/**
 * Pure view-model logic for the operator console.
 *
 * Everything here is a deterministic function of server responses, so the
 * whole presentation layer is unit-testable without a DOM or a server.
 */
import type {
  GamePayload,
  OptionPayload,
  Selection,
  SessionSnapshot,
  TrialRecord,
} from './api.js'

export function otherOption(selection: Selection): Selection {
  return selection === 'A' ? 'B' : 'A'
}

export function formatReward(value: number): string {
  return value.toFixed(2)
}

export function formatPercent(value: number): string {
  return `${(100 * value).toFixed(0)}%`
}

/** "3.00 with 25% (else 0.00)" — the card line for one gamble. */
export function describeOption(option: OptionPayload): string {
  return `${formatReward(option.high)} with ${formatPercent(option.p_high)} (else ${formatReward(option.low)})`
}

export function trialLabel(game: GamePayload): string {
  return `Game ${game.game_index + 1} — trial ${game.trial + 1} of ${game.trials_per_game}`
}

export function suggestionBanner(suggestion: Selection, agrees: boolean): string {
  return agrees
    ? `The aid suggests option ${suggestion} — it agrees with you.`
    : `The aid suggests option ${suggestion} — different from your pick.`
}

/** Which buttons the keep-or-switch step offers, switch pre-highlighted. */
export function finalChoices(
  initial: Selection,
  suggestion: Selection,
): { keep: Selection; switchTo: Selection | null } {
  if (initial === suggestion) {
    return { keep: initial, switchTo: null }
  }
  return { keep: initial, switchTo: suggestion }
}

export function resultLine(payoff: number, foregone: number, selection: Selection): string {
  return (
    `Option ${selection} paid ${formatReward(payoff)}; ` +
    `the other option would have paid ${formatReward(foregone)}.`
  )
}

export interface GameStats {
  gameIndex: number
  trials: number
  meanReliance: number
  meanRho: number
  acceptanceRate: number
}

export interface DashboardStats {
  games: GameStats[]
  totalTrials: number
  cumulativeReward: number
  meanRho: number
}

/**
 * Recompute the dashboard readouts from the raw transcript. The server's
 * trace is the source of truth; the test suite checks these numbers equal
 * an offline recomputation of the same records.
 */
export function dashboardStats(records: TrialRecord[]): DashboardStats {
  const byGame = new Map<number, TrialRecord[]>()
  for (const record of records) {
    const bucket = byGame.get(record.game_index) ?? []
    bucket.push(record)
    byGame.set(record.game_index, bucket)
  }
  const games: GameStats[] = [...byGame.entries()]
    .sort(([a], [b]) => a - b)
    .map(([gameIndex, rows]) => ({
      gameIndex,
      trials: rows.length,
      meanReliance: mean(rows.map((r) => r.reliance)),
      meanRho: mean(rows.map((r) => r.rho)),
      acceptanceRate: mean(rows.map((r) => (r.final_selection === r.suggestion ? 1 : 0))),
    }))
  return {
    games,
    totalTrials: records.length,
    cumulativeReward: records.reduce((acc, r) => acc + r.payoff, 0),
    meanRho: records.length === 0 ? 0 : mean(records.map((r) => r.rho)),
  }
}

function mean(values: number[]): number {
  return values.reduce((acc, v) => acc + v, 0) / values.length
}

/** SVG path for a sparkline of per-game values in [0,1]. */
export function sparklinePath(values: number[], width: number, height: number): string {
  if (values.length === 0) return ''
  const step = values.length === 1 ? 0 : width / (values.length - 1)
  return values
    .map((v, i) => {
      const x = (i * step).toFixed(1)
      const y = ((1 - v) * height).toFixed(1)
      return `${i === 0 ? 'M' : 'L'}${x},${y}`
    })
    .join(' ')
}

/** x-positions of ABC-refit markers on the per-game axis. */
export function refitMarkerPositions(
  updateGames: number[],
  gamesShown: number,
  width: number,
): number[] {
  if (gamesShown <= 1) return []
  const step = width / (gamesShown - 1)
  return updateGames
    .filter((g) => g >= 1 && g <= gamesShown)
    .map((g) => (g - 1) * step)
}

export type Phase = 'pick-initial' | 'keep-or-switch' | 'show-result' | 'finished'

/** The UI phase implied by a server snapshot (used on resync/reconnect). */
export function phaseFromSnapshot(snapshot: SessionSnapshot): Phase {
  switch (snapshot.state) {
    case 'awaiting-initial':
      return 'pick-initial'
    case 'awaiting-final':
      return 'keep-or-switch'
    case 'finished':
      return 'finished'
  }
}

export function emptyDashboardMessage(stats: DashboardStats): string | null {
  return stats.totalTrials === 0 ? 'No trials completed yet.' : null
}
