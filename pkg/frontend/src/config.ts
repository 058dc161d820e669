/** Runtime configuration for the capture extension. */
export interface CaptureConfig {
  /** Base URL of the ingest service, e.g. "http://127.0.0.1:8000". */
  server_url: string;
  /**
   * Hard privacy gate: no event leaves the machine unless this is true.
   * Capture itself keeps working — events accumulate in the local buffer
   * and are delivered once (and only if) consent is given.
   */
  consent_given: boolean;
  /** Where the local buffer lives: a file path here, a storage key in a browser. */
  buffer_key: string;
  /** How often the background flush runs. */
  flush_interval_seconds: number;
}
