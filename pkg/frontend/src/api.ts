/**
 * Typed client for the session service HTTP+JSON API.
 *
 * The console never computes payoffs or suggestions itself — every number
 * shown in the UI comes back from these endpoints.
 */

export interface OptionPayload {
  high: number
  low: number
  p_high: number
}

export interface GamePayload {
  game_id: string
  game_index: number
  trial: number
  trials_per_game: number
  option_a: OptionPayload
  option_b: OptionPayload
}

export type Selection = 'A' | 'B'
export type SessionState = 'awaiting-initial' | 'awaiting-final' | 'finished'

export interface SessionSnapshot {
  session_id: string
  state: SessionState
  aid_mode: string
  game_index: number
  trial: number
  games_per_operator: number
  trials_per_game: number
  trials_completed: number
  cumulative_reward: number
  abc_update_games: number[]
  game?: GamePayload
  suggestion?: Selection
  agrees?: boolean
  initial_selection?: Selection
}

export interface InitialResponse {
  session_id: string
  state: SessionState
  suggestion: Selection
  agrees: boolean
  reliance_indicated: number
}

export interface TrialRecord {
  schema_version: number
  session_id: string
  game_id: string
  game_index: number
  trial: number
  initial_selection: Selection
  predicted_selection: Selection
  suggestion: Selection
  optimal_option: Selection
  agreement: number
  reliance: number
  reliance_indicated: number
  ambiguous_reliance: boolean
  final_selection: Selection
  payoff: number
  foregone: number
  capability: number
  rho: number
}

export interface FinalResponse {
  session_id: string
  state: SessionState
  payoff: number
  foregone: number
  trial_summary: TrialRecord
  cumulative_reward: number
  next?: GamePayload
  session_summary?: {
    trials: number
    cumulative_reward: number
    mean_rho: number
  }
}

export interface TracePayload {
  session_id: string
  schema_version: number
  records: TrialRecord[]
}

export interface CreateSessionOptions {
  aid_mode?: string
  games_per_operator?: number
  trials_per_game?: number
  abc_update_interval_games?: number
  predictor_backend?: string
  seed?: number
  abc_accepted_target?: number
  abc_batch_size?: number
  abc_max_batches?: number
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`)
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  })
  const body = await response.json().catch(() => null)
  if (!response.ok) {
    throw new ApiError(response.status, body?.detail ?? body)
  }
  return body as T
}

export class SessionApi {
  constructor(readonly baseUrl: string = '') {}

  health(): Promise<{ status: string }> {
    return request(`${this.baseUrl}/healthz`)
  }

  createSession(options: CreateSessionOptions = {}): Promise<SessionSnapshot> {
    return request(`${this.baseUrl}/api/sessions`, {
      method: 'POST',
      body: JSON.stringify(options),
    })
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return request(`${this.baseUrl}/api/sessions/${sessionId}`)
  }

  postInitial(sessionId: string, selection: Selection): Promise<InitialResponse> {
    return request(`${this.baseUrl}/api/sessions/${sessionId}/initial`, {
      method: 'POST',
      body: JSON.stringify({ selection }),
    })
  }

  postFinal(sessionId: string, selection: Selection): Promise<FinalResponse> {
    return request(`${this.baseUrl}/api/sessions/${sessionId}/final`, {
      method: 'POST',
      body: JSON.stringify({ selection }),
    })
  }

  getTrace(sessionId: string): Promise<TracePayload> {
    return request(`${this.baseUrl}/api/sessions/${sessionId}/trace`)
  }
}
